//! Snapshot serialization: one CSV file per (time, component).
//!
//! Frozen format:
//!
//! ```text
//! # time = 0.5
//! # component = p
//! # norm_factor = 2
//! 0,0,0,0
//! 0,0.125,0,0
//! ...
//! ```
//!
//! Data rows run over y (row j is the grid line y = j, starting at y = 0);
//! columns run over x. Values are field units, printed with Rust's shortest
//! round-trip float formatting.

use std::fmt::Write as _;

use qlee::statevector::FieldGrid;
use qlee::{Component, Result};

/// Deterministic snapshot file name: step index and component.
pub fn snapshot_file_name(step: usize, component: Component) -> String {
    format!("snap_{step:06}_{}.csv", component.name())
}

/// Render one component of a field snapshot in the frozen CSV form.
pub fn render_snapshot_csv(
    field: &FieldGrid,
    component: Component,
    time: f64,
) -> Result<String> {
    let values = field.component(component)?;
    let mut s = String::new();
    let _ = writeln!(s, "# time = {time}");
    let _ = writeln!(s, "# component = {}", component.name());
    let _ = writeln!(s, "# norm_factor = {}", field.norm_factor);
    for y in 0..field.ny_points {
        for x in 0..field.nx_points {
            if x > 0 {
                s.push(',');
            }
            let _ = write!(s, "{}", values[x * field.ny_points + y]);
        }
        s.push('\n');
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn golden_layout_is_y_rows_x_columns() {
        // 4 x 2 points; value 1 at (x = 2, y = 0), value -0.5 at (x = 0, y = 1).
        let mut f = FieldGrid::zeros(4, 2);
        f.p[2 * 2] = 1.0;
        f.p[1] = -0.5;
        f.norm_factor = 2.0;
        let csv = render_snapshot_csv(&f, Component::P, 0.25).unwrap();
        assert_eq!(
            csv,
            "# time = 0.25\n# component = p\n# norm_factor = 2\n0,0,1,0\n-0.5,0,0,0\n"
        );
    }

    #[test]
    fn file_names_sort_by_step() {
        assert_eq!(snapshot_file_name(0, Component::P), "snap_000000_p.csv");
        assert_eq!(snapshot_file_name(12, Component::V), "snap_000012_v.csv");
        let a = snapshot_file_name(9, Component::U);
        let b = snapshot_file_name(10, Component::U);
        assert!(a < b);
    }

    #[test]
    fn zero_component_is_not_serializable() {
        let f = FieldGrid::zeros(2, 2);
        assert!(render_snapshot_csv(&f, Component::Zero, 0.0).is_err());
    }
}
