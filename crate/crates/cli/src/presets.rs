//! Built-in workloads, as partial JSON configs.

use serde_json::{json, Value};

pub const NAMES: &[&str] = &[
    "fig1", "fig2a", "fig2b", "fig2c", "fig3", "fig4a", "fig4b", "fig5a", "fig5b",
];

/// Non-relativistic packet of width L/20 at rest: ⟨E⟩ ≈ (1 + 10⁻⁴)mc².
fn slow_packet(x0: f64) -> Value {
    json!({
        "model": { "well_width_in_compton": 112.5 },
        "packet": { "x0_over_L": x0, "sigma_over_L": 0.05, "p0_in_hbar_over_L": 0.0 },
    })
}

/// Intermediate regime: L = 100 λ_C, p0 = 4mc/3 (γ = 5/3), width L/25.
fn intermediate(t_min: f64, t_max: f64, samples: usize) -> Value {
    let l = 100.0 * 2.0 * std::f64::consts::PI;
    json!({
        "model": { "well_width_in_compton": 100.0 },
        "packet": { "x0_over_L": 0.5, "sigma_over_L": 0.04, "p0_in_hbar_over_L": 4.0 / 3.0 * l },
        "times": { "t_min": t_min, "t_max": t_max, "unit": "t_rev", "samples": samples },
    })
}

pub fn lookup(name: &str) -> Option<Value> {
    let carpet_times =
        json!({ "times": { "t_min": 0.0, "t_max": 1.0, "unit": "t_rev", "samples": 401 } });
    let mut value = match name {
        "fig1" => json!({
            "model": { "well_width_in_compton": 800.0 },
            "levels": { "n_min": 1, "n_max": 1000 },
        }),
        // no rational symmetry below n = 100
        "fig2a" => slow_packet(0.37),
        "fig2b" => slow_packet(2.0 / 3.0),
        "fig2c" => slow_packet(0.5),
        "fig3" => json!({
            "model": { "well_width_in_compton": 1.0 },
            "packet": { "x0_over_L": 0.5, "sigma_over_L": 1e-5, "p0_in_hbar_over_L": 0.0 },
            "times": { "t_min": 0.0, "t_max": 1.0, "unit": "t_cl", "samples": 65 },
            "output": { "columns": 2048 },
        }),
        "fig4a" => intermediate(0.0, 1.0, 1001),
        "fig4b" => intermediate(0.49, 0.51, 801),
        "fig5a" | "fig5b" => {
            let x0 = if name == "fig5a" { 2.0 / 3.0 } else { 0.5 };
            let mut v = slow_packet(x0);
            crate::config::merge(
                &mut v,
                json!({
                    "packet": { "levels": 60 },
                    "engine": { "kind": "diag", "diag": { "p_max_in_hbar_over_L": 800.0, "grid_size": 4096 } },
                }),
            );
            v
        }
        _ => return None,
    };
    if name.starts_with("fig2") {
        crate::config::merge(&mut value, carpet_times);
    }
    Some(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{merge, RunConfig};

    #[test]
    fn every_preset_resolves() {
        for name in NAMES {
            let mut base = serde_json::to_value(RunConfig::default()).unwrap();
            merge(&mut base, lookup(name).unwrap());
            let config = RunConfig::from_value(base).unwrap();
            config.resolve().unwrap_or_else(|e| panic!("{name}: {e}"));
        }
        assert!(lookup("fig9").is_none());
    }
}
