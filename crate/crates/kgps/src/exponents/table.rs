//! The restriction table: theorem applicability and embedding route over a
//! rational lattice of nonlinearity exponents.
//!
//! Verdicts are evaluated on the lattice `p = n/60`, `p in [2, 8]`, whose
//! denominator is divisible by every breakpoint denominator in scope
//! (`p0`, `p_sob`, `pc`, and the supercritical cap all have denominators
//! dividing 60 for `d <= 5`, `k <= 3`), so each run boundary in the table
//! sits exactly on a breakpoint. Consecutive lattice points with identical
//! verdicts merge into one row.

use super::{embedding_route, rat, theorem_applicability, Rat, Route};
use crate::error::Result;

/// Lattice denominator; covers p_sob(5,1) = 7/4, cap(5) = 31/15, etc.
pub const LATTICE_DEN: i64 = 60;
pub const P_MIN: i64 = 2 * LATTICE_DEN;
pub const P_MAX: i64 = 8 * LATTICE_DEN;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableRow {
    pub d: u32,
    pub k: u32,
    pub p_lo: Rat,
    pub p_hi: Rat,
    pub thm1: bool,
    pub thm2: bool,
    pub route: Route,
}

/// Builds the full table for `d in [1,5]`, `k in [1,3]`.
pub fn restriction_table() -> Result<Vec<TableRow>> {
    let mut rows = Vec::new();
    for d in 1..=5u32 {
        for k in 1..=3u32 {
            let mut current: Option<TableRow> = None;
            for num in P_MIN..=P_MAX {
                let p = rat(num, LATTICE_DEN);
                let verdicts = theorem_applicability(d, k, p, None)?;
                let route = embedding_route(d, k, p)?;
                let thm1 = verdicts.thm1.applicable;
                let thm2 = verdicts.thm2.applicable;
                match current.as_mut() {
                    Some(row) if row.thm1 == thm1 && row.thm2 == thm2 && row.route == route => {
                        row.p_hi = p;
                    }
                    _ => {
                        if let Some(row) = current.take() {
                            rows.push(row);
                        }
                        current = Some(TableRow {
                            d,
                            k,
                            p_lo: p,
                            p_hi: p,
                            thm1,
                            thm2,
                            route,
                        });
                    }
                }
            }
            if let Some(row) = current.take() {
                rows.push(row);
            }
        }
    }
    Ok(rows)
}

fn yesno(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

/// Renders the table as CSV with columns `d,k,p_lo,p_hi,thm1,thm2,route`.
pub fn table_csv() -> Result<String> {
    let mut out = String::from("d,k,p_lo,p_hi,thm1,thm2,route\n");
    for row in restriction_table()? {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            row.d,
            row.k,
            row.p_lo,
            row.p_hi,
            yesno(row.thm1),
            yesno(row.thm2),
            row.route
        ));
    }
    Ok(out)
}
