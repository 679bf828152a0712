//! Export of an allocation instance in the plain-text LP format read by most
//! MILP solvers (CPLEX, Gurobi, HiGHS, SCIP, GLPK).
//!
//! The energy term `b_i * W_i(sum_j u_ij) * E_i` is written linearly as
//! `alpha_i E_i b_i + beta_i E_i sum_j u_ij`, which is exact once `u_ij <= b_i`
//! is stated. Penalties are expanded to the constant `sum_j R_j` minus
//! `R_j / D_j` per granted Mbps; the constant rides on a variable fixed to 1.
//! The binary `z` selects the all-off configuration: it replaces the
//! attachment of every user and forces every station off.

use std::fmt::Write;

use super::AllocationInstance;

pub fn export_milp_text(inst: &AllocationInstance) -> String {
    let k = inst.stations.len();
    let n = inst.users.len();
    let revenue = inst.revenue();
    let mut out = String::new();

    let _ = writeln!(out, "\\ User-to-station allocation: {k} stations, {n} users");
    out.push_str("Minimize\n obj:");
    let mut terms = Vec::new();
    for (i, bs) in inst.stations.iter().enumerate() {
        terms.push(term(bs.static_cost_rate(), &format!("b{}", i + 1)));
    }
    for (i, bs) in inst.stations.iter().enumerate() {
        for j in 0..n {
            terms.push(term(bs.per_user_cost_rate(), &format!("u{}_{}", i + 1, j + 1)));
        }
    }
    for i in 0..k {
        for (j, u) in inst.users.iter().enumerate() {
            terms.push(term(-u.class.revenue_density(), &format!("d{}_{}", i + 1, j + 1)));
        }
    }
    if revenue > 0.0 {
        terms.push(term(revenue, "one"));
    }
    write_terms(&mut out, &terms);

    out.push_str("Subject To\n");
    for (i, bs) in inst.stations.iter().enumerate() {
        if n > 0 {
            let row: Vec<String> = (1..=n).map(|j| term(1.0, &format!("d{}_{j}", i + 1))).collect();
            let _ = write!(out, " cap{}:", i + 1);
            write_terms_inline(&mut out, &row);
            let _ = writeln!(out, " <= {}", bs.capacity);
        }
    }
    for j in 1..=n {
        let mut row: Vec<String> = (1..=k).map(|i| term(1.0, &format!("u{i}_{j}"))).collect();
        row.push(term(1.0, "z"));
        let _ = write!(out, " attach{j}:");
        write_terms_inline(&mut out, &row);
        out.push_str(" = 1\n");
    }
    if n > 0 {
        for i in 1..=k {
            let mut row: Vec<String> = (1..=n).map(|j| term(1.0, &format!("u{i}_{j}"))).collect();
            row.push(term(-(inst.big_u as f64), &format!("b{i}")));
            let _ = write!(out, " active{i}:");
            write_terms_inline(&mut out, &row);
            out.push_str(" <= 0\n");
        }
    }
    for i in 1..=k {
        for (j, u) in inst.users.iter().enumerate() {
            let j = j + 1;
            let row = [term(1.0, &format!("d{i}_{j}")), term(-u.class.min_rate, &format!("u{i}_{j}"))];
            let _ = write!(out, " rate{i}_{j}:");
            write_terms_inline(&mut out, &row);
            out.push_str(" <= 0\n");
        }
    }
    for i in 1..=k {
        for j in 1..=n {
            let _ = writeln!(out, " link{i}_{j}: u{i}_{j} - b{i} <= 0");
        }
    }
    if n > 0 {
        for i in 1..=k {
            let _ = writeln!(out, " sleep{i}: b{i} + z <= 1");
        }
    }

    out.push_str("Bounds\n");
    if revenue > 0.0 {
        out.push_str(" one = 1\n");
    }
    for i in 1..=k {
        for j in 1..=n {
            let _ = writeln!(out, " 0 <= d{i}_{j}");
        }
    }

    out.push_str("Binaries\n");
    let mut binaries: Vec<String> = (1..=k).map(|i| format!("b{i}")).collect();
    for i in 1..=k {
        for j in 1..=n {
            binaries.push(format!("u{i}_{j}"));
        }
    }
    if n > 0 {
        binaries.push("z".into());
    }
    for chunk in binaries.chunks(10) {
        let _ = writeln!(out, " {}", chunk.join(" "));
    }
    out.push_str("End\n");
    out
}

fn term(coef: f64, var: &str) -> String {
    if coef < 0.0 {
        format!("- {} {var}", -coef)
    } else {
        format!("+ {coef} {var}")
    }
}

/// Objective rows can get long; wrap every eight terms.
fn write_terms(out: &mut String, terms: &[String]) {
    if terms.is_empty() {
        out.push_str(" 0 b1\n");
        return;
    }
    for (idx, chunk) in terms.chunks(8).enumerate() {
        if idx > 0 {
            out.push_str("   ");
        }
        for t in chunk {
            out.push(' ');
            out.push_str(t);
        }
        out.push('\n');
    }
}

fn write_terms_inline(out: &mut String, terms: &[String]) {
    for t in terms {
        out.push(' ');
        out.push_str(t);
    }
}
