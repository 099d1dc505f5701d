use serde_json::{json, Value};

use super::{CohomologyTable, Theory};
use crate::specform::Grading;

pub const CSV_HEADER: &str = "theory,p,q,dim,hausdorff,N,K,M";

fn stamps(t: &CohomologyTable) -> Vec<&'static str> {
    let mut s = Vec::new();
    if t.hausdorff_completed {
        s.push("hausdorff-completed");
    }
    if t.formal {
        s.push("formal/truncated only");
    }
    s
}

/// Aligned text: a diamond for bidegree theories, a row of Betti numbers for de Rham.
pub fn table_text(t: &CohomologyTable) -> String {
    let mut out = format!("{} cohomology ({})\n", t.theory.title(), t.truncation);
    let stamp = stamps(t);
    if !stamp.is_empty() {
        out.push_str(&format!("[{}]\n", stamp.join(", ")));
    }
    match t.theory {
        Theory::DeRham => {
            let b: Vec<String> = (0..=4).map(|k| t.dim(Grading::Degree(k)).to_string()).collect();
            out.push_str(&format!("b = {}\n", b.join(" ")));
        }
        Theory::Third => {
            for key in t.theory.keys() {
                if let Grading::Bidegree(p, q) = key {
                    out.push_str(&format!("({p},{q})+1: {}\n", t.dim(key)));
                }
            }
        }
        _ => {
            let width = t.dims.values().map(|d| d.to_string().len()).max().unwrap_or(1).max(1);
            for s in 0..=4u8 {
                let cells: Vec<String> = (s.saturating_sub(2)..=s.min(2))
                    .rev()
                    .map(|p| format!("{:>width$}", t.bidegree(p, s - p)))
                    .collect();
                let indent = " ".repeat((3 - cells.len()) * (width + 1));
                out.push_str(&format!("{indent}{}\n", cells.join(&" ".repeat(width + 2))));
            }
        }
    }
    out
}

/// `theory,p,q,dim,hausdorff,N,K,M` rows; de Rham rows carry the degree in `p` and leave `q` empty.
pub fn table_csv(t: &CohomologyTable, header: bool) -> String {
    let mut out = String::new();
    if header {
        out.push_str(CSV_HEADER);
        out.push('\n');
    }
    let tr = &t.truncation;
    for key in t.theory.keys() {
        let (p, q) = match key {
            Grading::Bidegree(p, q) => (p.to_string(), q.to_string()),
            Grading::Degree(k) => (k.to_string(), String::new()),
        };
        out.push_str(&format!(
            "{},{p},{q},{},{},{},{},{}\n",
            t.theory.name(),
            t.dim(key),
            t.hausdorff_completed,
            tr.n,
            tr.k,
            tr.m
        ));
    }
    out
}

pub fn table_json(t: &CohomologyTable) -> Value {
    let dims: Vec<Value> = t
        .theory
        .keys()
        .into_iter()
        .map(|key| match key {
            Grading::Bidegree(p, q) => json!({"p": p, "q": q, "dim": t.dim(key)}),
            Grading::Degree(k) => json!({"k": k, "dim": t.dim(key)}),
        })
        .collect();
    json!({
        "theory": t.theory.name(),
        "dims": dims,
        "hausdorff_completed": t.hausdorff_completed,
        "formal": t.formal,
        "truncation": {"N": t.truncation.n, "K": t.truncation.k, "M": t.truncation.m, "tol": t.truncation.tol},
    })
}
