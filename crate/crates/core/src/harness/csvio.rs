//! CSV artifact writers.
//!
//! Every number is printed with 17 significant digits (`{:.16e}`), which is
//! enough to reproduce the underlying f64 bit for bit, so reruns of a
//! deterministic experiment produce byte-identical files. Writers build the
//! whole file in memory and hand it back as one string; callers write it in
//! a single filesystem operation so a file either exists complete or not at
//! all.

use std::fmt::Write as _;

use crate::solver::{DiagnosticsRow, Grid, Snapshot};

/// One value, full precision. NaN prints as `nan` (lowercase, stable).
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else {
        format!("{x:.16e}")
    }
}

/// A snapshot over the grid. Headers: `x,u` in one dimension, `x,y,u` in two
/// (row-major: x varies fastest), `x,u,v` for a two-species pair.
pub fn snapshot_csv(grid: &Grid, fields: &[&[f64]]) -> String {
    assert!(!fields.is_empty() && fields.len() <= 2, "one or two species");
    for field in fields {
        assert_eq!(field.len(), grid.cells(), "field matches grid");
    }
    let two_species = fields.len() == 2;
    let two_dimensional = grid.dim() == 2;
    assert!(!(two_species && two_dimensional), "two-species output is one-dimensional");

    let mut out = String::new();
    if two_species {
        out.push_str("x,u,v\n");
    } else if two_dimensional {
        out.push_str("x,y,u\n");
    } else {
        out.push_str("x,u\n");
    }
    for idx in 0..grid.cells() {
        let center = grid.cell_center(idx);
        let _ = write!(out, "{}", fmt_sig(center[0]));
        if two_dimensional {
            let _ = write!(out, ",{}", fmt_sig(center[1]));
        }
        for field in fields {
            let _ = write!(out, ",{}", fmt_sig(field[idx]));
        }
        out.push('\n');
    }
    out
}

/// File name of the `index`-th snapshot artifact.
pub fn snapshot_name(index: usize) -> String {
    format!("snapshot_{index:04}.csv")
}

/// Per-step diagnostics. Header: `t,mass,umax,umin,reaction_integral,dt`.
pub fn diagnostics_csv(rows: &[DiagnosticsRow]) -> String {
    let mut out = String::from("t,mass,umax,umin,reaction_integral,dt\n");
    for row in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_sig(row.t),
            fmt_sig(row.mass),
            fmt_sig(row.umax),
            fmt_sig(row.umin),
            fmt_sig(row.reaction_integral),
            fmt_sig(row.dt),
        );
    }
    out
}

/// Snapshot artifacts for a trajectory, in capture order.
pub fn snapshot_files(grid: &Grid, snapshots: &[Snapshot]) -> Vec<(String, String, f64)> {
    snapshots
        .iter()
        .enumerate()
        .map(|(i, snap)| (snapshot_name(i), snapshot_csv(grid, &[&snap.field]), snap.time))
        .collect()
}

/// Paired two-species snapshots (captured at identical times).
pub fn snapshot_files_pair(
    grid: &Grid,
    u: &[Snapshot],
    v: &[Snapshot],
) -> Vec<(String, String, f64)> {
    assert_eq!(u.len(), v.len(), "paired trajectories snapshot together");
    u.iter()
        .zip(v)
        .enumerate()
        .map(|(i, (su, sv))| {
            assert_eq!(su.time, sv.time, "paired snapshots share their capture time");
            (snapshot_name(i), snapshot_csv(grid, &[&su.field, &sv.field]), su.time)
        })
        .collect()
}
