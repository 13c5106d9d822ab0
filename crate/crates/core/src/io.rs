//! CSV and JSON serialization of the solver's data types.
//!
//! All floats are printed with 17 significant digits so every value
//! round-trips bit-exactly through the text form.

use crate::conserved::ConservationReport;
use crate::error::{Error, Result};
use crate::grid::GridFunction;
use crate::lagrangian::{LagrangianState, UniformGrid};
use crate::measure::{Atom, EnergyMeasure};
use std::io::{BufRead, Write};

/// 17-significant-digit scientific notation; round-trips any f64.
pub fn fmt_f64(x: f64) -> String {
    // normalize -0.0 so equal runs emit identical bytes
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.16e}")
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|e| Error::Parse(format!("bad float {s:?}: {e}")))
}

/// `x,u,ux` rows.
pub fn write_grid_function(w: &mut impl Write, g: &GridFunction) -> Result<()> {
    writeln!(w, "x,u,ux")?;
    for i in 0..g.len() {
        writeln!(
            w,
            "{},{},{}",
            fmt_f64(g.nodes()[i]),
            fmt_f64(g.values()[i]),
            fmt_f64(g.derivative()[i])
        )?;
    }
    Ok(())
}

pub fn read_grid_function(r: impl BufRead) -> Result<GridFunction> {
    let mut nodes = Vec::new();
    let mut values = Vec::new();
    let mut deriv = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        if k == 0 {
            if line.trim() != "x,u,ux" {
                return Err(Error::Parse(format!("unexpected header {line:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let mut next = || {
            it.next()
                .ok_or_else(|| Error::Parse(format!("short row {line:?}")))
        };
        nodes.push(parse_f64(next()?)?);
        values.push(parse_f64(next()?)?);
        deriv.push(parse_f64(next()?)?);
    }
    GridFunction::new(nodes, values, deriv)
}

/// Density as `x,density` rows; atoms as a separate `position,mass` table.
pub fn write_energy_measure(
    density_w: &mut impl Write,
    atoms_w: &mut impl Write,
    mu: &EnergyMeasure,
) -> Result<()> {
    writeln!(density_w, "x,density")?;
    let d = mu.ac_density();
    for i in 0..d.len() {
        writeln!(
            density_w,
            "{},{}",
            fmt_f64(d.nodes()[i]),
            fmt_f64(d.values()[i])
        )?;
    }
    writeln!(atoms_w, "position,mass")?;
    for a in mu.atoms() {
        writeln!(atoms_w, "{},{}", fmt_f64(a.position), fmt_f64(a.mass))?;
    }
    Ok(())
}

pub fn read_atoms(r: impl BufRead) -> Result<Vec<Atom>> {
    let mut atoms = Vec::new();
    for (k, line) in r.lines().enumerate() {
        let line = line?;
        if k == 0 {
            if line.trim() != "position,mass" {
                return Err(Error::Parse(format!("unexpected header {line:?}")));
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let position = parse_f64(it.next().unwrap_or(""))?;
        let mass = parse_f64(
            it.next()
                .ok_or_else(|| Error::Parse(format!("short row {line:?}")))?,
        )?;
        atoms.push(Atom { position, mass });
    }
    Ok(atoms)
}

/// `alpha,y,U,H` rows under a JSON header line `# {"t":…,"dalpha":…,"n":…}`.
pub fn write_lagrangian_state(w: &mut impl Write, s: &LagrangianState) -> Result<()> {
    writeln!(
        w,
        "# {{\"t\": {}, \"dalpha\": {}, \"n\": {}}}",
        fmt_f64(s.t()),
        fmt_f64(s.alpha().step()),
        s.len()
    )?;
    writeln!(w, "alpha,y,U,H")?;
    for i in 0..s.len() {
        writeln!(
            w,
            "{},{},{},{}",
            fmt_f64(s.alpha().node(i)),
            fmt_f64(s.y()[i]),
            fmt_f64(s.u()[i]),
            fmt_f64(s.h()[i])
        )?;
    }
    Ok(())
}

pub fn read_lagrangian_state(r: impl BufRead) -> Result<LagrangianState> {
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Parse("empty state file".into()))??;
    let json = header
        .strip_prefix('#')
        .ok_or_else(|| Error::Parse("missing JSON header line".into()))?;
    let meta: serde_json::Value =
        serde_json::from_str(json.trim()).map_err(|e| Error::Parse(e.to_string()))?;
    let t = meta["t"]
        .as_f64()
        .ok_or_else(|| Error::Parse("header missing t".into()))?;
    let columns = lines
        .next()
        .ok_or_else(|| Error::Parse("missing column header".into()))??;
    if columns.trim() != "alpha,y,U,H" {
        return Err(Error::Parse(format!("unexpected columns {columns:?}")));
    }
    let (mut alpha, mut y, mut u, mut h) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let vals: Vec<&str> = line.split(',').collect();
        if vals.len() != 4 {
            return Err(Error::Parse(format!("short row {line:?}")));
        }
        alpha.push(parse_f64(vals[0])?);
        y.push(parse_f64(vals[1])?);
        u.push(parse_f64(vals[2])?);
        h.push(parse_f64(vals[3])?);
    }
    if alpha.len() < 2 {
        return Err(Error::Parse("state needs at least two rows".into()));
    }
    let step = alpha[1] - alpha[0];
    let grid = UniformGrid::new(alpha[0], step, alpha.len())?;
    LagrangianState::new(grid, y, u, h, t)
}

/// `t,E_tilde,F_tilde,E_ac,mu_s` rows.
pub fn write_conservation_report(w: &mut impl Write, rep: &ConservationReport) -> Result<()> {
    writeln!(w, "t,E_tilde,F_tilde,E_ac,mu_s")?;
    for i in 0..rep.times.len() {
        writeln!(
            w,
            "{},{},{},{},{}",
            fmt_f64(rep.times[i]),
            fmt_f64(rep.e_tilde[i]),
            fmt_f64(rep.f_tilde[i]),
            fmt_f64(rep.e_ac[i]),
            fmt_f64(rep.mu_s[i])
        )?;
    }
    Ok(())
}

/// JSON summary of the drifts.
pub fn conservation_summary_json(rep: &ConservationReport) -> String {
    serde_json::json!({
        "rel_drift_E": rep.rel_drift_e,
        "rel_drift_F": rep.rel_drift_f,
    })
    .to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::{make_peakon, suggest_alpha_grid, ProfileGrid};

    #[test]
    fn float_format_round_trips() {
        for &x in &[
            0.0,
            1.0,
            -1.0 / 3.0,
            std::f64::consts::PI,
            2.2250738585072014e-308,
            1.7976931348623157e308,
            -4.9406564584124654e-324,
        ] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn grid_function_round_trip() {
        let g = make_peakon(1.0, 0.5, &ProfileGrid::with_step(8.0, 0.05))
            .unwrap()
            .u;
        let mut buf = Vec::new();
        write_grid_function(&mut buf, &g).unwrap();
        let back = read_grid_function(&buf[..]).unwrap();
        assert_eq!(g.nodes(), back.nodes());
        assert_eq!(g.values(), back.values());
        assert_eq!(g.derivative(), back.derivative());
    }

    #[test]
    fn lagrangian_state_round_trip() {
        let data = make_peakon(1.0, 0.0, &ProfileGrid::with_step(10.0, 0.02)).unwrap();
        let grid = suggest_alpha_grid(&data, 401, 2.0, 0.0).unwrap();
        let st = crate::lagrangian::alpha_transform(&data, &grid).unwrap();
        let mut buf = Vec::new();
        write_lagrangian_state(&mut buf, &st).unwrap();
        let back = read_lagrangian_state(&buf[..]).unwrap();
        assert_eq!(st.y(), back.y());
        assert_eq!(st.u(), back.u());
        assert_eq!(st.h(), back.h());
        assert_eq!(st.t(), back.t());
    }

    #[test]
    fn measure_tables() {
        let d = make_peakon(1.0, 0.0, &ProfileGrid::with_step(6.0, 0.1)).unwrap();
        let mu = crate::measure::EnergyMeasure::new(
            d.mu.ac_density().clone(),
            vec![crate::measure::Atom {
                position: 1.0,
                mass: 0.5,
            }],
        )
        .unwrap();
        let mut dens = Vec::new();
        let mut atoms = Vec::new();
        write_energy_measure(&mut dens, &mut atoms, &mu).unwrap();
        assert!(String::from_utf8_lossy(&dens).starts_with("x,density"));
        let back = read_atoms(&atoms[..]).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].mass, 0.5);
    }
}
