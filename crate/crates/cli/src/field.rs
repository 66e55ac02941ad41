//! Excess-supply vector field over a price grid, with the fixed-regime
//! residuals needed to contour the zero manifolds.

use std::io::Write;

use riskeq_core::{classify_regime, excess_supply, regime_excess, MarketInstance, PriceVector, Regime, RiskSet};

use crate::error::Result;
use crate::report::num;

pub const FIELD_HEADER: &str = "pi_0,pi_1,z_0,z_1,regime,za_0,za_1,zb_0,zb_1,zc_0,zc_1";

#[derive(Debug, Clone, PartialEq)]
pub struct FieldRow {
    pub prices: [f64; 2],
    pub z: [f64; 2],
    /// `None` where the regime is undefined (equal prices).
    pub regime: Option<Regime>,
    /// Fixed-regime excess supplies in A, B, C order; NaN where undefined.
    pub by_regime: [[f64; 2]; 3],
}

fn pair(v: riskeq_core::Result<Vec<f64>>) -> [f64; 2] {
    v.map_or([f64::NAN; 2], |z| [z[0], z[1]])
}

pub fn vector_field(inst: &MarketInstance, rs: &RiskSet, nodes: &[[f64; 2]]) -> Result<Vec<FieldRow>> {
    nodes
        .iter()
        .map(|&p| {
            let prices = PriceVector::new(p.to_vec())?;
            let z = pair(Ok(excess_supply(inst, rs, &prices)?));
            let regime = classify_regime(inst, rs, &prices).ok();
            let by_regime = Regime::ALL.map(|r| pair(regime_excess(inst, rs, &prices, r)));
            Ok(FieldRow {
                prices: p,
                z,
                regime,
                by_regime,
            })
        })
        .collect()
}

pub fn write_field(rows: &[FieldRow], mut out: impl Write) -> std::io::Result<()> {
    writeln!(out, "{FIELD_HEADER}")?;
    for row in rows {
        let mut cells = vec![num(row.prices[0]), num(row.prices[1]), num(row.z[0]), num(row.z[1])];
        cells.push(row.regime.map_or("none", |r| r.label()).to_string());
        for z in row.by_regime {
            cells.push(num(z[0]));
            cells.push(num(z[1]));
        }
        writeln!(out, "{}", cells.join(","))?;
    }
    Ok(())
}
