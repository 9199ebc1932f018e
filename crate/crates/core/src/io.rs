//! CSV output. Fixed column order, header row, 17 significant digits.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use crate::analysis::ConvergenceReport;
use crate::error::Result;
use crate::greeks::GreekSurface;
use crate::hedging::HedgeReport;
use crate::model::BatesParams;

/// `{:.16e}`: 17 significant digits, round-trips every f64.
pub fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn line<W: Write>(w: &mut W, fields: &[String]) -> Result<()> {
    writeln!(w, "{}", fields.join(","))?;
    Ok(())
}

/// One row per valid node: S, σ, x, y, value.
pub fn write_surface_csv<W: Write>(w: &mut W, gs: &GreekSurface, params: &BatesParams) -> Result<()> {
    writeln!(w, "S,sigma,x,y,{}", gs.kind)?;
    let g = &gs.grid;
    for j in gs.j0..gs.j0 + gs.nyv {
        for i in gs.i0..gs.i0 + gs.nxv {
            let (x, y) = (g.x[i], g.y[j]);
            line(w, &[num(gs.contract.strike * x.exp()), num(y * params.sigma_v), num(x), num(y), num(gs.at(i, j))])?;
        }
    }
    Ok(())
}

pub fn write_convergence_csv<W: Write>(w: &mut W, rep: &ConvergenceReport) -> Result<()> {
    writeln!(w, "scheme,quantity,h,eps_l2,eps_linf")?;
    for r in &rep.rows {
        line(w, &[rep.scheme.to_string(), rep.quantity.to_string(), num(r.h), num(r.eps_l2), num(r.eps_linf)])?;
    }
    Ok(())
}

pub fn write_hedge_csv<W: Write>(w: &mut W, rep: &HedgeReport) -> Result<()> {
    let write_cols = rep.rows.iter().any(|r| r.write.is_some());
    let mut header = "scheme,h,ratio,ref_ratio,pct_error".to_string();
    if write_cols {
        header.push_str(",net_delta,underlying_qty,net_theta,verdict");
    }
    writeln!(w, "{header}")?;
    for r in &rep.rows {
        let mut f = vec![r.scheme.to_string(), num(r.h), num(r.ratio), num(r.ref_ratio), num(r.pct_error)];
        if let Some(ws) = &r.write {
            let verdict = if ws.recommend { "recommend" } else { "decline" };
            f.extend([num(ws.net_delta), num(ws.underlying_qty), num(ws.net_theta), verdict.to_string()]);
        }
        line(w, &f)?;
    }
    Ok(())
}

pub fn write_payoff_csv<W: Write>(w: &mut W, rows: &[(f64, f64)]) -> Result<()> {
    writeln!(w, "S,payoff")?;
    for &(s, p) in rows {
        line(w, &[num(s), num(p)])?;
    }
    Ok(())
}

pub fn write_file(path: &Path, body: impl FnOnce(&mut BufWriter<File>) -> Result<()>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    body(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    write_file(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        writeln!(w)?;
        Ok(())
    })
}
