//! Plot-ready reductions of the CSV outputs.

use std::str::FromStr;

use cns_core::error::{CnsError, Result};

use crate::csv::Table;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlotKind {
    /// `log r` against `log` of one quantity, from a quantities CSV.
    QuantityVsR,
    /// `(k, rho_k, G)` with radii in decreasing order, from a quantities CSV.
    GTrace,
    /// `(log 1/r, log N)` with the fitted line, from a dimension CSV.
    DimensionFit,
    /// Global energy with the `C* (1 + t)` envelope, from an energy CSV.
    EnergyTime,
}

impl FromStr for PlotKind {
    type Err = CnsError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quantity-vs-r" => Ok(PlotKind::QuantityVsR),
            "G-trace" => Ok(PlotKind::GTrace),
            "dimension-fit" => Ok(PlotKind::DimensionFit),
            "energy-time" => Ok(PlotKind::EnergyTime),
            other => Err(CnsError::Config(format!(
                "unknown plot kind `{other}`; expected quantity-vs-r, G-trace, dimension-fit or energy-time"
            ))),
        }
    }
}

/// Reduce `input` to the plot table for `kind`. `quantity` selects the column for
/// [`PlotKind::QuantityVsR`].
pub fn emit_plot_data(input: &Table, kind: PlotKind, quantity: &str) -> Result<String> {
    let mut out = String::new();
    match kind {
        PlotKind::QuantityVsR => {
            let r = input.column("r")?;
            let q = input.column(quantity)?;
            out.push_str(&format!("log_r,log_{quantity}\n"));
            for (r, v) in r.iter().zip(&q) {
                out.push_str(&format!("{:e},{:e}\n", r.ln(), v.ln()));
            }
        }
        PlotKind::GTrace => {
            let r = input.column("r")?;
            let g = input.column("G")?;
            let mut rows: Vec<(f64, f64)> = r.into_iter().zip(g).collect();
            rows.sort_by(|a, b| b.0.total_cmp(&a.0));
            out.push_str("k,rho,G\n");
            for (k, (r, g)) in rows.iter().enumerate() {
                out.push_str(&format!("{k},{r:e},{g:e}\n"));
            }
        }
        PlotKind::DimensionFit => {
            let x = input.column("log_inv_r")?;
            let y = input.column("log_count")?;
            let fit = input.column("fit_line")?;
            if x.len() < 2 {
                return Err(CnsError::Degenerate("dimension fit needs two scales".into()));
            }
            let slope = (fit[1] - fit[0]) / (x[1] - x[0]);
            let intercept = fit[0] - slope * x[0];
            out.push_str("log_inv_r,log_count,fit_slope,fit_intercept\n");
            for (x, y) in x.iter().zip(&y) {
                out.push_str(&format!("{x:e},{y:e},{slope:e},{intercept:e}\n"));
            }
        }
        PlotKind::EnergyTime => {
            let t = input.column("t")?;
            let lhs = input.column("lhs")?;
            let (t0, c) = match (t.first(), lhs.first()) {
                (Some(&t0), Some(&c)) => (t0, c),
                _ => return Err(CnsError::Degenerate("energy table is empty".into())),
            };
            out.push_str("t,lhs,envelope\n");
            for (t, l) in t.iter().zip(&lhs) {
                out.push_str(&format!("{t:e},{l:e},{:e}\n", c * (1.0 + (t - t0))));
            }
        }
    }
    Ok(out)
}
