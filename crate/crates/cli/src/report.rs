use std::collections::BTreeMap;
use std::io::Write;

use serde::Serialize;

/// Tensor outputs a scan can request. The emission order in reports is
/// this declaration order, independent of the order given on the
/// command line, so identical configs produce identical bytes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, clap::ValueEnum)]
pub enum Output {
    Koszul,
    Riemann,
    Ricci,
    Scalar,
    /// Weight-2 densitized Einstein tensor (dimension 4 only).
    EinsteinDensity,
    /// Rank, signature and classification flags only.
    Classify,
}

#[derive(Debug, Serialize)]
pub struct TensorEntry {
    pub indices: Vec<usize>,
    pub value: f64,
}

#[derive(Debug, Serialize)]
pub struct SignatureOut {
    pub zero: usize,
    pub neg: usize,
    pub pos: usize,
}

#[derive(Debug, Serialize)]
pub struct FlagsOut {
    pub nondegenerate: bool,
    pub radical_stationary: bool,
}

#[derive(Debug, Serialize)]
pub struct ResidualsOut {
    pub riemann_symmetry: f64,
    pub radical_annihilation: f64,
}

/// One scan point. Serialized as one JSON object per line; field order
/// is fixed by this declaration.
#[derive(Debug, Serialize)]
pub struct PointReport {
    pub point: Vec<f64>,
    pub rank: Option<usize>,
    pub signature: Option<SignatureOut>,
    pub flags: Option<FlagsOut>,
    /// Requested tensors as flat `{indices, value}` lists, keyed by
    /// output name (BTreeMap: stable alphabetical key order).
    pub values: BTreeMap<&'static str, Vec<TensorEntry>>,
    pub residuals: Option<ResidualsOut>,
    /// Outputs whose magnitude exceeded `1/tol_residual` at this point
    /// (divergence candidates near a signature change) — reported,
    /// never clamped.
    pub divergent: Vec<&'static str>,
    pub eval_error: Option<String>,
}

impl PointReport {
    pub fn flagged(&self) -> bool {
        self.eval_error.is_some() || !self.divergent.is_empty()
    }
}

/// Column layout for CSV output: fixed and derived only from the
/// requested outputs and the dimension, so headers never depend on the
/// data.
pub struct CsvLayout {
    columns: Vec<(&'static str, Vec<usize>)>,
    coord_names: Vec<String>,
}

impl CsvLayout {
    pub fn new(n: usize, coord_names: &[String], outputs: &[Output]) -> Self {
        let mut columns = Vec::new();
        for out in outputs {
            match out {
                Output::Koszul => push_indexed(&mut columns, "koszul", n, 3),
                Output::Riemann => push_indexed(&mut columns, "riemann", n, 4),
                Output::Ricci => push_indexed(&mut columns, "ricci", n, 2),
                Output::Scalar => columns.push(("scalar", Vec::new())),
                Output::EinsteinDensity => {
                    push_indexed(&mut columns, "einstein_density", n, 2);
                    columns.push(("einstein_s_density", Vec::new()));
                }
                Output::Classify => {}
            }
        }
        CsvLayout {
            columns,
            coord_names: coord_names.to_vec(),
        }
    }

    pub fn write_header(&self, w: &mut impl Write) -> std::io::Result<()> {
        let mut cols: Vec<String> = self.coord_names.clone();
        cols.extend(
            [
                "rank",
                "sig_zero",
                "sig_neg",
                "sig_pos",
                "nondegenerate",
                "radical_stationary",
                "riemann_symmetry_residual",
                "radical_annihilation_residual",
                "divergent",
                "eval_error",
            ]
            .map(String::from),
        );
        for (name, idx) in &self.columns {
            if idx.is_empty() {
                cols.push((*name).to_string());
            } else {
                let suffix: Vec<String> = idx.iter().map(|i| i.to_string()).collect();
                cols.push(format!("{name}_{}", suffix.join("_")));
            }
        }
        writeln!(w, "{}", cols.join(","))
    }

    pub fn write_row(&self, w: &mut impl Write, r: &PointReport) -> std::io::Result<()> {
        let mut cols: Vec<String> = r.point.iter().map(|x| format!("{x}")).collect();
        match (&r.rank, &r.signature, &r.flags) {
            (Some(rank), Some(sig), Some(flags)) => {
                cols.push(rank.to_string());
                cols.push(sig.zero.to_string());
                cols.push(sig.neg.to_string());
                cols.push(sig.pos.to_string());
                cols.push(flags.nondegenerate.to_string());
                cols.push(flags.radical_stationary.to_string());
            }
            _ => cols.extend(std::iter::repeat_with(String::new).take(6)),
        }
        match &r.residuals {
            Some(res) => {
                cols.push(format!("{}", res.riemann_symmetry));
                cols.push(format!("{}", res.radical_annihilation));
            }
            None => cols.extend(std::iter::repeat_with(String::new).take(2)),
        }
        cols.push(r.divergent.join(";"));
        cols.push(r.eval_error.clone().unwrap_or_default().replace(',', ";"));
        for (name, idx) in &self.columns {
            let cell = r
                .values
                .get(name)
                .and_then(|entries| entries.iter().find(|e| &e.indices == idx))
                .map(|e| format!("{}", e.value))
                .unwrap_or_default();
            cols.push(cell);
        }
        writeln!(w, "{}", cols.join(","))
    }
}

fn push_indexed(
    columns: &mut Vec<(&'static str, Vec<usize>)>,
    name: &'static str,
    n: usize,
    order: usize,
) {
    let count = n.pow(order as u32);
    for flat in 0..count {
        let mut idx = vec![0usize; order];
        let mut rem = flat;
        for slot in (0..order).rev() {
            idx[slot] = rem % n;
            rem /= n;
        }
        columns.push((name, idx));
    }
}
