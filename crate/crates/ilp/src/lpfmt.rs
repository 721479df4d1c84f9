//! LP text dump for cross-checking instances by hand in external solvers.

use std::fmt::Write;

use crate::model::{IlpInstance, Sense};

fn term(out: &mut String, first: bool, coef: f64, name: &str) {
    if first {
        let _ = write!(out, " {coef:e} {name}");
    } else if coef < 0.0 {
        let _ = write!(out, " - {:e} {name}", -coef);
    } else {
        let _ = write!(out, " + {coef:e} {name}");
    }
}

/// Renders `minimize / subject to / bounds / binary` sections. Strict rows are
/// written closed, with their epsilon already subtracted.
pub fn to_lp_format(inst: &IlpInstance) -> String {
    let mut out = String::from("minimize\n obj:");
    let mut first = true;
    for (j, &c) in inst.objective.iter().enumerate() {
        if c != 0.0 {
            term(&mut out, first, c, &inst.name_of(j));
            first = false;
        }
    }
    if first {
        out.push_str(" 0");
    }
    out.push_str("\nsubject to\n");
    for (i, c) in inst.constraints.iter().enumerate() {
        let name = c.name.clone().unwrap_or_else(|| format!("c{i}"));
        let _ = write!(out, " {name}:");
        for (k, &(j, a)) in c.coeffs.iter().enumerate() {
            term(&mut out, k == 0, a, &inst.name_of(j));
        }
        if c.coeffs.is_empty() {
            out.push_str(" 0");
        }
        let (op, rhs) = match c.sense {
            Sense::Le => ("<=", c.rhs),
            Sense::Ge => (">=", c.rhs),
            Sense::Lt => ("<=", c.rhs - c.strict_epsilon()),
        };
        let _ = writeln!(out, " {op} {rhs:e}");
    }
    out.push_str("bounds\n");
    for j in 0..inst.n_vars {
        match inst.fixed.get(&j) {
            Some(&v) => {
                let _ = writeln!(out, " {} = {}", inst.name_of(j), v as u8);
            }
            None => {
                let _ = writeln!(out, " 0 <= {} <= 1", inst.name_of(j));
            }
        }
    }
    out.push_str("binary\n");
    for j in 0..inst.n_vars {
        let _ = writeln!(out, " {}", inst.name_of(j));
    }
    out.push_str("end\n");
    out
}
