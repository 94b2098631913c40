//! CSV interchange for radial profiles: columns `r,u,du` or `t,v,vdot`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EFTrajectory, RadialError, RadialSolution};

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct RadialRow {
    r: f64,
    u: f64,
    du: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
struct EfRow {
    t: f64,
    v: f64,
    vdot: f64,
}

/// Raw `(r, u, u')` samples as read from disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSamples {
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

fn io_err(e: impl std::fmt::Display) -> RadialError {
    RadialError::Invalid(format!("csv: {e}"))
}

pub fn write_radial_csv<W: std::io::Write>(sol: &RadialSolution, out: W) -> Result<(), RadialError> {
    let mut w = csv::Writer::from_writer(out);
    for i in 0..sol.len() {
        w.serialize(RadialRow {
            r: sol.grid[i],
            u: sol.u[i],
            du: sol.du[i],
        })
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn write_ef_csv<W: std::io::Write>(traj: &EFTrajectory, out: W) -> Result<(), RadialError> {
    let mut w = csv::Writer::from_writer(out);
    for i in 0..traj.t.len() {
        w.serialize(EfRow {
            t: traj.t[i],
            v: traj.v[i],
            vdot: traj.vdot[i],
        })
        .map_err(io_err)?;
    }
    w.flush().map_err(io_err)
}

pub fn read_radial_csv<R: std::io::Read>(input: R) -> Result<RadialSamples, RadialError> {
    // '#' lines carry the run configuration of the producing report
    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(input);
    let mut s = RadialSamples {
        r: vec![],
        u: vec![],
        du: vec![],
    };
    for row in rd.deserialize::<RadialRow>() {
        let row = row.map_err(io_err)?;
        s.r.push(row.r);
        s.u.push(row.u);
        s.du.push(row.du);
    }
    if s.r.windows(2).any(|w| w[1] <= w[0]) {
        return Err(RadialError::Invalid("radii must be strictly increasing".into()));
    }
    if s.r.len() < 2 {
        return Err(RadialError::Invalid("need at least two rows".into()));
    }
    Ok(s)
}

pub fn read_radial_file(path: &Path) -> Result<RadialSamples, RadialError> {
    let f = std::fs::File::open(path).map_err(io_err)?;
    read_radial_csv(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{exact_solution, ExactKind};
    use crate::regimes::ProblemParams;

    #[test]
    fn csv_round_trip() {
        let p = ProblemParams::new(5, 0.0, 3.0).unwrap();
        let sol = exact_solution(&ExactKind::Basic, &p, 0.5, 50.0, 20).unwrap();
        let mut buf = Vec::new();
        write_radial_csv(&sol, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("r,u,du\n"));
        let back = read_radial_csv(&buf[..]).unwrap();
        assert_eq!(back.r, sol.grid);
        assert_eq!(back.u, sol.u);
        assert_eq!(back.du, sol.du);
    }

    #[test]
    fn rejects_unsorted_radii() {
        let data = "r,u,du\n2,1,0\n1,1,0\n";
        assert!(read_radial_csv(data.as_bytes()).is_err());
    }
}
