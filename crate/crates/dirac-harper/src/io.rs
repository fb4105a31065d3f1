//! CSV tables with fixed headers. Floats carry 17 significant digits.

use std::io::Write;

use crate::cocycle::LyapunovSpectrum;
use crate::continuum::{BranchWidth, FlatBandTable};
use crate::dynamics::{DynlocResult, WavepacketState};
use crate::greens::DecayProfile;
use crate::spectra::{BandWidth, DosEstimate, SpectrumSet};

pub const BUTTERFLY_HEADER: [&str; 5] = ["p", "q", "alpha", "k", "energy"];
pub const SPECTRUM_HEADER: [&str; 2] = ["index", "energy"];
pub const DOS_HEADER: [&str; 4] = ["bin_lo", "bin_hi", "count", "mass"];
pub const BAND_WIDTH_HEADER: [&str; 5] = ["band", "min", "max", "width", "flat"];
pub const DECAY_HEADER: [&str; 3] = ["distance", "log_green", "envelope"];
pub const DYNAMICS_HEADER: [&str; 4] = ["t", "n", "component", "probability"];
pub const MOMENTS_HEADER: [&str; 2] = ["t", "moment"];
pub const LAYER_HEADER: [&str; 5] = ["t", "mass1", "mass2", "mass3", "mass4"];
pub const CONTINUUM_BANDS_HEADER: [&str; 3] = ["kx", "branch", "energy"];
pub const LYAPUNOV_HEADER: [&str; 3] = ["index", "exponent", "stderr"];

/// `x` with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn writer<W: Write>(out: W, header: &[&str]) -> csv::Result<csv::Writer<W>> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    w.write_record(header)?;
    Ok(w)
}

/// One row per `(α, k, E)` point.
pub fn write_butterfly<W: Write>(out: W, sets: &[SpectrumSet]) -> csv::Result<()> {
    let mut w = writer(out, &BUTTERFLY_HEADER)?;
    for s in sets {
        for &(e, k) in &s.eigenvalues {
            w.write_record([s.p.to_string(), s.q.to_string(), fmt_f64(s.alpha), fmt_f64(k), fmt_f64(e)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_spectrum<W: Write>(out: W, values: &[f64]) -> csv::Result<()> {
    let mut w = writer(out, &SPECTRUM_HEADER)?;
    for (i, e) in values.iter().enumerate() {
        w.write_record([i.to_string(), fmt_f64(*e)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_dos<W: Write>(out: W, d: &DosEstimate) -> csv::Result<()> {
    let mut w = writer(out, &DOS_HEADER)?;
    for i in 0..d.counts.len() {
        w.write_record([fmt_f64(d.edges[i]), fmt_f64(d.edges[i + 1]), d.counts[i].to_string(), fmt_f64(d.mass[i])])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_band_widths<W: Write>(out: W, bands: &[BandWidth]) -> csv::Result<()> {
    let mut w = writer(out, &BAND_WIDTH_HEADER)?;
    for b in bands {
        w.write_record([b.band.to_string(), fmt_f64(b.min), fmt_f64(b.max), fmt_f64(b.width), b.flat.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_branch_widths<W: Write>(out: W, branches: &[BranchWidth]) -> csv::Result<()> {
    let mut w = writer(out, &BAND_WIDTH_HEADER)?;
    for b in branches {
        w.write_record([b.branch.to_string(), fmt_f64(b.min), fmt_f64(b.max), fmt_f64(b.width), b.flat.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_decay<W: Write>(out: W, d: &DecayProfile) -> csv::Result<()> {
    let mut w = writer(out, &DECAY_HEADER)?;
    for ((dist, g), env) in d.distance.iter().zip(&d.log_green).zip(d.envelope()) {
        w.write_record([dist.to_string(), fmt_f64(*g), fmt_f64(env)])?;
    }
    w.flush()?;
    Ok(())
}

/// Long format: one row per `(t, n, component)` with `|ψ|²`; components 1-based.
pub fn write_dynamics<W: Write>(out: W, states: &[WavepacketState]) -> csv::Result<()> {
    let mut w = writer(out, &DYNAMICS_HEADER)?;
    for s in states {
        let t = fmt_f64(s.time);
        for (i, z) in s.amplitudes.iter().enumerate() {
            let n = s.window.0 + (i / 4) as i64;
            w.write_record([t.clone(), n.to_string(), (i % 4 + 1).to_string(), fmt_f64(z.norm_sqr())])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_moments<W: Write>(out: W, d: &DynlocResult) -> csv::Result<()> {
    let mut w = writer(out, &MOMENTS_HEADER)?;
    for (t, m) in d.times.iter().zip(&d.moments) {
        w.write_record([fmt_f64(*t), fmt_f64(*m)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_layer_trace<W: Write>(out: W, trace: &[(f64, [f64; 4])]) -> csv::Result<()> {
    let mut w = writer(out, &LAYER_HEADER)?;
    for (t, m) in trace {
        w.write_record([fmt_f64(*t), fmt_f64(m[0]), fmt_f64(m[1]), fmt_f64(m[2]), fmt_f64(m[3])])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_continuum_bands<W: Write>(out: W, t: &FlatBandTable) -> csv::Result<()> {
    let mut w = writer(out, &CONTINUUM_BANDS_HEADER)?;
    for (kx, e) in t.kx.iter().zip(&t.energies) {
        let k = fmt_f64(*kx);
        for (b, v) in e.iter().enumerate() {
            w.write_record([k.clone(), b.to_string(), fmt_f64(*v)])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_lyapunov<W: Write>(out: W, s: &LyapunovSpectrum) -> csv::Result<()> {
    let mut w = writer(out, &LYAPUNOV_HEADER)?;
    for i in 0..8 {
        w.write_record([(i + 1).to_string(), fmt_f64(s.exponents[i]), fmt_f64(s.stderr_each[i])])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [0.1, -1.0 / 3.0, 6.02214076e23, 5e-324, 0.0] {
            let s = fmt_f64(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_f64(0.1), "1.0000000000000001e-1");
    }

    #[test]
    fn spectrum_layout() {
        let mut buf = Vec::new();
        write_spectrum(&mut buf, &[-1.0, 2.5]).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "index,energy\n0,-1.0000000000000000e0\n1,2.5000000000000000e0\n");
    }
}
