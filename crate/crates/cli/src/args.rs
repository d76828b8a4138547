use std::f64::consts::PI;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Parser, Debug)]
#[command(
    name = "qpgreen",
    version,
    about = "Windowed quasi-periodic Green functions and doubly periodic grating scattering"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Successive differences max_K |G_{i+1} - G_i| over a growing truncation radius.
    GreenConvergence(GreenArgs),
    /// Grating solves, one row per (N, a) pair.
    GratingSolve(SolveArgs),
    /// Grating solves over a fan of polar incidence angles.
    AngleSweep(SweepArgs),
}

#[derive(Args, Debug, Clone)]
pub struct WaveArgs {
    /// Wavenumber: a number, or one of the literal tokens 2pi, 2sqrt2pi, 4pi.
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<String>,
    /// Read numeric --k and --bloch values in units of 2*pi/d1.
    #[arg(long)]
    pub scaled: bool,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Plain,
    Shifted,
    Modified,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum BcArg {
    Dirichlet,
    Neumann,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Args, Debug, Clone)]
pub struct ShiftArgs {
    /// Green function; grating-solve picks modified near Wood anomalies and plain elsewhere when omitted.
    #[arg(long, value_enum)]
    pub kernel: Option<KernelArg>,
    /// Shift order.
    #[arg(long, default_value_t = 3)]
    pub p: usize,
    /// Shift distance.
    #[arg(long, default_value_t = 1.4)]
    pub d: f64,
    /// Coefficient of each regularizing plane wave.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub b_value: f64,
}

#[derive(Args, Debug, Clone)]
pub struct SurfaceArgs {
    /// flat, or cos-cos:AMPLITUDE for f = AMPLITUDE cos(2 pi x) cos(2 pi y).
    #[arg(long, default_value = "cos-cos:0.5")]
    pub surface: String,
    #[arg(long, value_enum, default_value_t = BcArg::Dirichlet)]
    pub bc: BcArg,
    /// Single-layer coupling; defaults to -k.
    #[arg(long, allow_hyphen_values = true)]
    pub eta: Option<f64>,
    /// Double-layer coupling; defaults to 1.
    #[arg(long, allow_hyphen_values = true)]
    pub xi: Option<f64>,
    #[arg(long, default_value_t = 1e-6)]
    pub gmres_tol: f64,
}

#[derive(Args, Debug, Clone)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct GreenArgs {
    #[command(flatten)]
    pub wave: WaveArgs,
    /// Bloch wavevector A,B.
    #[arg(long, allow_hyphen_values = true)]
    pub bloch: Option<String>,
    #[command(flatten)]
    pub shift: ShiftArgs,
    /// BASE^FIRST..LAST, or an explicit comma-separated list.
    #[arg(long, default_value = "1.2^10..30")]
    pub a_schedule: String,
    /// Grid points per axis of the evaluation set.
    #[arg(long, default_value_t = 5)]
    pub points: usize,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    #[command(flatten)]
    pub wave: WaveArgs,
    /// Bloch wavevector A,B of the incident wave.
    #[arg(long, allow_hyphen_values = true)]
    pub bloch: Option<String>,
    #[command(flatten)]
    pub shift: ShiftArgs,
    #[command(flatten)]
    pub surface: SurfaceArgs,
    /// Grid sizes, comma separated.
    #[arg(long, default_value = "8")]
    pub n: String,
    /// Truncation radii, comma separated.
    #[arg(long, default_value = "60")]
    pub a: String,
    /// Report the B_00 error against a reference solve, by default at twice the largest N and four times the largest a.
    #[arg(long)]
    pub reference: bool,
    /// Grid size of the reference solve; implies --reference.
    #[arg(long)]
    pub ref_n: Option<usize>,
    /// Truncation radius of the reference solve; implies --reference.
    #[arg(long)]
    pub ref_a: Option<f64>,
    /// Directory for cached reference solves; defaults to qpgreen-cache under the system temp directory.
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    #[command(flatten)]
    pub wave: WaveArgs,
    #[command(flatten)]
    pub shift: ShiftArgs,
    #[command(flatten)]
    pub surface: SurfaceArgs,
    #[arg(long, default_value_t = 12)]
    pub n: usize,
    #[arg(long, default_value_t = 60.0)]
    pub a: f64,
    /// Centre of the sweep; defaults to pi/4.
    #[arg(long)]
    pub psi_center: Option<f64>,
    #[arg(long, default_value_t = 0.05)]
    pub psi_halfwidth: f64,
    /// Number of angles, the centre included when odd.
    #[arg(long, default_value_t = 7)]
    pub angles: usize,
    /// Azimuth of incidence.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub phi: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// Wavenumber as typed and as used.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavenumber {
    pub input: String,
    pub scaled: bool,
    pub value: f64,
}

/// Resolves `--k`/`--scaled`; `default` is used when `--k` is absent.
pub fn resolve_k(wave: &WaveArgs, default: (&str, bool), d1: f64) -> Result<Wavenumber, String> {
    let (input, scaled) = match &wave.k {
        Some(k) => (k.trim().to_string(), wave.scaled),
        None => (default.0.to_string(), default.1),
    };
    let token = match input.as_str() {
        "2pi" => Some(2.0 * PI),
        "2sqrt2pi" => Some(2.0 * 2f64.sqrt() * PI),
        "4pi" => Some(4.0 * PI),
        _ => None,
    };
    let value = match token {
        Some(_) if scaled => return Err(format!("--k {input} is already absolute; drop --scaled")),
        Some(v) => v,
        None => {
            let v: f64 = input.parse().map_err(|_| format!("cannot read wavenumber '{input}'"))?;
            if scaled {
                v * 2.0 * PI / d1
            } else {
                v
            }
        }
    };
    if !(value.is_finite() && value > 0.0) {
        return Err(format!("wavenumber must be positive, got {input}"));
    }
    Ok(Wavenumber { input, scaled, value })
}

/// Parses `A,B`.
pub fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 2 {
        return Err(format!("expected A,B, got '{s}'"));
    }
    let a = parts[0].parse().map_err(|_| format!("cannot read '{}'", parts[0]))?;
    let b = parts[1].parse().map_err(|_| format!("cannot read '{}'", parts[1]))?;
    Ok((a, b))
}

/// Parses `BASE^FIRST..LAST` or a comma-separated list of radii.
pub fn parse_schedule(s: &str) -> Result<Vec<f64>, String> {
    let bad = || format!("cannot read a schedule '{s}'; use BASE^FIRST..LAST or a comma list");
    if let Some((base, range)) = s.split_once('^') {
        let base: f64 = base.trim().parse().map_err(|_| bad())?;
        let (lo, hi) = range.split_once("..").ok_or_else(bad)?;
        let lo: i32 = lo.trim().parse().map_err(|_| bad())?;
        let hi: i32 = hi.trim().parse().map_err(|_| bad())?;
        if !(base > 1.0) || hi <= lo {
            return Err(bad());
        }
        return Ok((lo..=hi).map(|i| base.powi(i)).collect());
    }
    parse_list(s)
}

pub fn parse_list<T: std::str::FromStr>(s: &str) -> Result<Vec<T>, String> {
    let out: Vec<T> = s
        .split(',')
        .map(|v| v.trim().parse().map_err(|_| format!("cannot read '{}' in '{s}'", v.trim())))
        .collect::<Result<_, _>>()?;
    if out.is_empty() {
        return Err(format!("empty list '{s}'"));
    }
    Ok(out)
}

/// Parses `flat` or `cos-cos:AMPLITUDE`.
pub fn parse_surface(s: &str) -> Result<Option<f64>, String> {
    match s.trim() {
        "flat" => Ok(None),
        other => {
            let amp = other
                .strip_prefix("cos-cos:")
                .ok_or_else(|| format!("unknown surface '{s}'; use flat or cos-cos:AMPLITUDE"))?;
            amp.parse().map(Some).map_err(|_| format!("cannot read amplitude '{amp}'"))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wave(k: Option<&str>, scaled: bool) -> WaveArgs {
        WaveArgs { k: k.map(String::from), scaled }
    }

    #[test]
    fn wavenumber_tokens() {
        let k = resolve_k(&wave(Some("2sqrt2pi"), false), ("1", true), 1.0).unwrap();
        assert_eq!(k.value, 2.0 * 2f64.sqrt() * PI);
        assert!(resolve_k(&wave(Some("4pi"), true), ("1", true), 1.0).is_err());
        let k = resolve_k(&wave(None, false), ("0.4", true), 1.0).unwrap();
        assert!((k.value - 0.8 * PI).abs() < 1e-15);
        assert_eq!(resolve_k(&wave(Some("2.5"), false), ("1", true), 1.0).unwrap().value, 2.5);
        assert!(resolve_k(&wave(Some("-1"), false), ("1", true), 1.0).is_err());
    }

    #[test]
    fn schedules_and_lists() {
        let s = parse_schedule("1.2^10..30").unwrap();
        assert_eq!(s.len(), 21);
        assert!((s[0] - 1.2f64.powi(10)).abs() < 1e-12);
        assert_eq!(parse_schedule("10, 20,40").unwrap(), vec![10.0, 20.0, 40.0]);
        assert!(parse_schedule("1.2^30..10").is_err());
        assert_eq!(parse_list::<usize>("8,16").unwrap(), vec![8, 16]);
        assert_eq!(parse_pair("0.4,-0.3").unwrap(), (0.4, -0.3));
        assert!(parse_pair("1").is_err());
    }

    #[test]
    fn surfaces() {
        assert_eq!(parse_surface("flat").unwrap(), None);
        assert_eq!(parse_surface("cos-cos:0.25").unwrap(), Some(0.25));
        assert!(parse_surface("sine").is_err());
    }
}
