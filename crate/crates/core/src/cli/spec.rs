//! Input specification mini-language.
//!
//! `kind:key=value,key=value`, for example `gaussian:sigma=2` or
//! `mixture:weights=0.5;0.5,components=optimizer(s=1);gaussian(sigma=2)`.
//! Two shorthand forms: `8pi*<spec>` for Keller-Segel data and Legendre
//! sums such as `1+0.5*P1-0.1*P3` for sphere densities.
//!
//! [`InputSpec`]'s `Display` is canonical: every key is written, in a fixed
//! order, and parsing it gives back the same value.

use crate::error::{Error, ErrorKind, Result};
use std::fmt;

const MODULE: &str = "cli";

pub const MAX_LEGENDRE_DEGREE: usize = 64;
pub const MAX_MIXTURE_PARTS: usize = 8;

#[derive(Debug, Clone, PartialEq)]
pub enum InputSpec {
    /// Centred planar Gaussian of variance `sigma^2`.
    Gaussian { sigma: f64 },
    /// `h_{s,x0}` with `x0 = (x, y)`.
    Optimizer { s: f64, x: f64, y: f64 },
    /// `h_s (1 + eps P_mode(z(r)))` with `z = (1 - r^2)/(1 + r^2)`, renormalized.
    PerturbedOptimizer { s: f64, eps: f64, mode: usize },
    /// Weighted sum of planar components, renormalized.
    Mixture { parts: Vec<(f64, InputSpec)> },
    /// `u_{t,n}` on S^2 with `n` at polar angle `theta`, azimuth `phi`.
    SphereOptimizer { t: f64, theta: f64, phi: f64 },
    /// Seeded random field on S^2 with degrees `1..=l`. Without a seed the
    /// run seed is used.
    BandLimitedRandom {
        seed: Option<u64>,
        l: usize,
        amplitude: f64,
    },
    /// Log of a normalized Poisson kernel plus `eps cos(k theta)`, shifted so
    /// that `int e^u = 1`.
    CirclePoisson { r: f64, alpha: f64, eps: f64, k: usize },
    /// `sum a_l P_l(z)` with `a_0 = 1`, trailing zeros trimmed.
    Legendre { coeffs: Vec<f64> },
    /// `8 pi` times a planar density.
    CriticalMass(Box<InputSpec>),
}

/// Where a spec lives, which decides the commands that accept it.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Planar,
    SphereField,
    SphereDensity,
    Circle,
    KellerSegel,
}

impl Domain {
    pub fn name(self) -> &'static str {
        match self {
            Domain::Planar => "planar",
            Domain::SphereField => "sphere-field",
            Domain::SphereDensity => "sphere-density",
            Domain::Circle => "circle",
            Domain::KellerSegel => "keller-segel",
        }
    }
}

const KINDS: [&str; 7] = [
    "gaussian",
    "optimizer",
    "perturbed-optimizer",
    "sphere-optimizer",
    "band-limited-random",
    "circle-poisson",
    "mixture",
];

fn parse_error(src: &str, col: usize, msg: impl fmt::Display) -> Error {
    Error::new(
        ErrorKind::Parse,
        MODULE,
        format!("spec {src:?} at column {}: {msg}", col + 1),
    )
}

fn param_error(msg: impl Into<String>) -> Error {
    Error::new(ErrorKind::Parameter, MODULE, msg)
}

impl InputSpec {
    pub fn parse(src: &str) -> Result<Self> {
        let spec = Parser { src }.spec(0, src.len())?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn domain(&self) -> Domain {
        match self {
            InputSpec::Gaussian { .. }
            | InputSpec::Optimizer { .. }
            | InputSpec::PerturbedOptimizer { .. }
            | InputSpec::Mixture { .. } => Domain::Planar,
            InputSpec::SphereOptimizer { .. } | InputSpec::BandLimitedRandom { .. } => Domain::SphereField,
            InputSpec::Legendre { .. } => Domain::SphereDensity,
            InputSpec::CirclePoisson { .. } => Domain::Circle,
            InputSpec::CriticalMass(_) => Domain::KellerSegel,
        }
    }

    /// Planar and centred at the origin, so a radial grid represents it.
    pub fn is_radial(&self) -> bool {
        match self {
            InputSpec::Gaussian { .. } | InputSpec::PerturbedOptimizer { .. } => true,
            InputSpec::Optimizer { x, y, .. } => *x == 0.0 && *y == 0.0,
            InputSpec::Mixture { parts } => parts.iter().all(|(_, p)| p.is_radial()),
            InputSpec::CriticalMass(inner) => inner.is_radial(),
            _ => false,
        }
    }

    /// Parameter ranges. Called by [`InputSpec::parse`]; specs built in code
    /// should call it too.
    pub fn validate(&self) -> Result<()> {
        let finite = |name: &str, v: f64| -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(param_error(format!("{name} must be finite, got {v}")))
            }
        };
        let within = |name: &str, v: f64, lo: f64, hi: f64| -> Result<()> {
            finite(name, v)?;
            if v < lo || v > hi {
                return Err(param_error(format!("{name} must lie in [{lo}, {hi}], got {v}")));
            }
            Ok(())
        };
        let s_range = |s: f64| within("s", s, (-6f64).exp(), 6f64.exp());
        match self {
            InputSpec::Gaussian { sigma } => {
                within("sigma", *sigma, 1e-3, 1e3)?;
            }
            InputSpec::Optimizer { s, x, y } => {
                s_range(*s)?;
                within("x", *x, -10.0, 10.0)?;
                within("y", *y, -10.0, 10.0)?;
            }
            InputSpec::PerturbedOptimizer { s, eps, mode } => {
                s_range(*s)?;
                within("eps", *eps, -1.0, 1.0)?;
                if !(1..=32).contains(mode) {
                    return Err(param_error(format!("mode must lie in 1..=32, got {mode}")));
                }
            }
            InputSpec::Mixture { parts } => {
                if parts.is_empty() || parts.len() > MAX_MIXTURE_PARTS {
                    return Err(param_error(format!(
                        "mixture needs 1 to {MAX_MIXTURE_PARTS} components, got {}",
                        parts.len()
                    )));
                }
                for (w, p) in parts {
                    within("mixture weight", *w, 0.0, 1e6)?;
                    if *w == 0.0 {
                        return Err(param_error("mixture weights must be positive"));
                    }
                    if matches!(p, InputSpec::Mixture { .. }) || p.domain() != Domain::Planar {
                        return Err(param_error("mixture components must be planar and not mixtures"));
                    }
                    p.validate()?;
                }
            }
            InputSpec::SphereOptimizer { t, theta, phi } => {
                within("t", *t, 0.0, 10.0)?;
                within("theta", *theta, 0.0, std::f64::consts::PI)?;
                within("phi", *phi, -2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI)?;
            }
            InputSpec::BandLimitedRandom { l, amplitude, .. } => {
                if !(1..=32).contains(l) {
                    return Err(param_error(format!("band limit l must lie in 1..=32, got {l}")));
                }
                within("amplitude", *amplitude, 0.0, 5.0)?;
            }
            InputSpec::CirclePoisson { r, alpha, eps, k } => {
                within("r", *r, 0.0, 0.99)?;
                within("alpha", *alpha, -2.0 * std::f64::consts::PI, 2.0 * std::f64::consts::PI)?;
                within("eps", *eps, -2.0, 2.0)?;
                if !(1..=64).contains(k) {
                    return Err(param_error(format!("k must lie in 1..=64, got {k}")));
                }
            }
            InputSpec::Legendre { coeffs } => {
                if coeffs.first() != Some(&1.0) {
                    return Err(param_error("Legendre density needs constant term exactly 1"));
                }
                if coeffs.len() > MAX_LEGENDRE_DEGREE + 1 {
                    return Err(param_error(format!("Legendre degree above {MAX_LEGENDRE_DEGREE}")));
                }
                if coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
                    return Err(param_error("Legendre coefficients must not end in zeros"));
                }
                for c in coeffs {
                    within("Legendre coefficient", *c, -1e3, 1e3)?;
                }
            }
            InputSpec::CriticalMass(inner) => {
                if inner.domain() != Domain::Planar {
                    return Err(param_error("8pi* needs a planar density"));
                }
                inner.validate()?;
            }
        }
        Ok(())
    }
}

struct Parser<'a> {
    src: &'a str,
}

impl<'a> Parser<'a> {
    fn err(&self, col: usize, msg: impl fmt::Display) -> Error {
        parse_error(self.src, col, msg)
    }

    /// Parse `src[lo..hi]` as a full spec.
    fn spec(&self, lo: usize, hi: usize) -> Result<InputSpec> {
        let text = &self.src[lo..hi];
        if text.is_empty() {
            return Err(self.err(lo, "empty spec"));
        }
        if let Some(rest) = text.strip_prefix("8pi*") {
            if rest.starts_with("8pi*") {
                return Err(self.err(lo + 4, "8pi* may appear once"));
            }
            let inner = self.spec(lo + 4, hi)?;
            return Ok(InputSpec::CriticalMass(Box::new(inner)));
        }
        let first = text.as_bytes()[0];
        if first.is_ascii_digit() || first == b'+' || first == b'-' || first == b'.' {
            return self.legendre(lo, hi);
        }
        let (kind_end, params) = match text.find(':') {
            Some(k) => (lo + k, Some((lo + k + 1, hi))),
            None => (hi, None),
        };
        let kind = &self.src[lo..kind_end];
        if !KINDS.contains(&kind) {
            return Err(self.err(lo, format!("unknown kind {kind:?}")));
        }
        let pairs = match params {
            Some((a, b)) => self.pairs(a, b, ',')?,
            None => Vec::new(),
        };
        self.build(kind, lo, pairs)
    }

    /// Split `src[lo..hi]` at top-level `sep` (outside parentheses) into
    /// `key=value` pairs with their columns.
    fn pairs(&self, lo: usize, hi: usize, sep: char) -> Result<Vec<Pair<'a>>> {
        let mut out = Vec::new();
        for (a, b) in self.split(lo, hi, sep)? {
            let item = &self.src[a..b];
            let Some(eq) = item.find('=') else {
                return Err(self.err(a, format!("expected key=value, got {item:?}")));
            };
            let key = &item[..eq];
            if key.is_empty() {
                return Err(self.err(a, "missing key before '='"));
            }
            if out.iter().any(|p: &Pair| p.key == key) {
                return Err(self.err(a, format!("duplicate key {key:?}")));
            }
            out.push(Pair {
                key,
                value: &item[eq + 1..],
                col: a + eq + 1,
                used: false,
            });
        }
        Ok(out)
    }

    fn split(&self, lo: usize, hi: usize, sep: char) -> Result<Vec<(usize, usize)>> {
        let mut out = Vec::new();
        let mut depth = 0i32;
        let mut start = lo;
        for (i, c) in self.src[lo..hi].char_indices() {
            let at = lo + i;
            match c {
                '(' => depth += 1,
                ')' => {
                    depth -= 1;
                    if depth < 0 {
                        return Err(self.err(at, "unbalanced ')'"));
                    }
                }
                c if c == sep && depth == 0 => {
                    if at == start {
                        return Err(self.err(at, format!("empty item before {sep:?}")));
                    }
                    out.push((start, at));
                    start = at + 1;
                }
                _ => {}
            }
        }
        if depth != 0 {
            return Err(self.err(hi, "unbalanced '('"));
        }
        if start == hi {
            return Err(self.err(hi, "empty item at end"));
        }
        out.push((start, hi));
        Ok(out)
    }

    fn build(&self, kind: &str, col: usize, mut p: Vec<Pair<'a>>) -> Result<InputSpec> {
        let spec = match kind {
            "gaussian" => InputSpec::Gaussian {
                sigma: self.num(&mut p, "sigma", 1.0)?,
            },
            "optimizer" => InputSpec::Optimizer {
                s: self.num(&mut p, "s", 1.0)?,
                x: self.num(&mut p, "x", 0.0)?,
                y: self.num(&mut p, "y", 0.0)?,
            },
            "perturbed-optimizer" => InputSpec::PerturbedOptimizer {
                s: self.num(&mut p, "s", 1.0)?,
                eps: self.num(&mut p, "eps", 0.1)?,
                mode: self.int(&mut p, "mode", 1)? as usize,
            },
            "sphere-optimizer" => InputSpec::SphereOptimizer {
                t: self.num(&mut p, "t", 1.0)?,
                theta: self.num(&mut p, "theta", 0.0)?,
                phi: self.num(&mut p, "phi", 0.0)?,
            },
            "band-limited-random" => InputSpec::BandLimitedRandom {
                seed: match take(&mut p, "seed") {
                    Some((v, c)) => Some(v.parse::<u64>().map_err(|_| self.err(c, format!("bad seed {v:?}")))?),
                    None => None,
                },
                l: self.int(&mut p, "l", 4)? as usize,
                amplitude: self.num(&mut p, "amplitude", 0.5)?,
            },
            "circle-poisson" => InputSpec::CirclePoisson {
                r: self.num(&mut p, "r", 0.5)?,
                alpha: self.num(&mut p, "alpha", 0.0)?,
                eps: self.num(&mut p, "eps", 0.0)?,
                k: self.int(&mut p, "k", 1)? as usize,
            },
            "mixture" => self.mixture(col, &mut p)?,
            _ => return Err(self.err(col, format!("unknown kind {kind:?}"))),
        };
        if let Some(extra) = p.iter().find(|q| !q.used) {
            return Err(self.err(
                extra.col - extra.key.len() - 1,
                format!("unknown key {:?} for {kind}", extra.key),
            ));
        }
        Ok(spec)
    }

    fn mixture(&self, col: usize, p: &mut [Pair<'a>]) -> Result<InputSpec> {
        let weights_at = p.iter().position(|q| q.key == "weights");
        let comps_at = p.iter().position(|q| q.key == "components");
        let (Some(wi), Some(ci)) = (weights_at, comps_at) else {
            return Err(self.err(col, "mixture needs weights=... and components=..."));
        };
        p[wi].used = true;
        p[ci].used = true;
        let wcol = p[wi].col;
        let wlen = p[wi].value.len();
        let mut weights = Vec::new();
        for (a, b) in self.split(wcol, wcol + wlen, ';')? {
            weights.push(self.float(&self.src[a..b], a)?);
        }
        let ccol = p[ci].col;
        let clen = p[ci].value.len();
        let mut comps = Vec::new();
        for (a, b) in self.split(ccol, ccol + clen, ';')? {
            comps.push(self.component(a, b)?);
        }
        if weights.len() != comps.len() {
            return Err(self.err(
                ccol,
                format!("{} weights for {} components", weights.len(), comps.len()),
            ));
        }
        Ok(InputSpec::Mixture {
            parts: weights.into_iter().zip(comps).collect(),
        })
    }

    /// `kind(key=value,...)` or a bare `kind`.
    fn component(&self, lo: usize, hi: usize) -> Result<InputSpec> {
        let text = &self.src[lo..hi];
        let Some(open) = text.find('(') else {
            return self.build(text, lo, Vec::new());
        };
        if !text.ends_with(')') {
            return Err(self.err(hi, "component must end with ')'"));
        }
        let kind = &text[..open];
        if kind == "mixture" {
            return Err(self.err(lo, "mixtures do not nest"));
        }
        let pairs = if open + 1 == text.len() - 1 {
            Vec::new()
        } else {
            self.pairs(lo + open + 1, hi - 1, ',')?
        };
        self.build(kind, lo, pairs)
    }

    fn float(&self, v: &str, col: usize) -> Result<f64> {
        let x: f64 = v
            .parse()
            .map_err(|_| self.err(col, format!("expected a number, got {v:?}")))?;
        if !x.is_finite() {
            return Err(self.err(col, format!("non-finite number {v:?}")));
        }
        Ok(x)
    }

    fn num(&self, p: &mut [Pair], key: &str, default: f64) -> Result<f64> {
        match take(p, key) {
            Some((v, c)) => self.float(v, c),
            None => Ok(default),
        }
    }

    fn int(&self, p: &mut [Pair], key: &str, default: u32) -> Result<u32> {
        match take(p, key) {
            Some((v, c)) => v
                .parse::<u32>()
                .map_err(|_| self.err(c, format!("expected a nonnegative integer for {key}, got {v:?}"))),
            None => Ok(default),
        }
    }

    /// `1+0.5*P1-0.1*P3`: signed terms, each a number with an optional `*P<l>`.
    fn legendre(&self, lo: usize, hi: usize) -> Result<InputSpec> {
        let b = self.src.as_bytes();
        let mut i = lo;
        let mut coeffs: Vec<Option<f64>> = Vec::new();
        while i < hi {
            let start = i;
            let mut j = i;
            if b[j] == b'+' || b[j] == b'-' {
                j += 1;
            } else if start != lo {
                return Err(self.err(j, "expected '+' or '-' between terms"));
            }
            // number: digits, '.', and an exponent with optional sign
            while j < hi {
                let c = b[j];
                let exp_sign = (c == b'+' || c == b'-') && j > start && (b[j - 1] == b'e' || b[j - 1] == b'E');
                if c.is_ascii_digit() || c == b'.' || c == b'e' || c == b'E' || exp_sign {
                    j += 1;
                } else {
                    break;
                }
            }
            let value = self.float(&self.src[start..j], start)?;
            let mut degree = 0usize;
            if self.src[j..hi].starts_with("*P") {
                let d0 = j + 2;
                let mut d1 = d0;
                while d1 < hi && b[d1].is_ascii_digit() {
                    d1 += 1;
                }
                degree = self.src[d0..d1]
                    .parse()
                    .map_err(|_| self.err(d0, "expected a degree after 'P'"))?;
                if degree > MAX_LEGENDRE_DEGREE {
                    return Err(self.err(d0, format!("degree above {MAX_LEGENDRE_DEGREE}")));
                }
                j = d1;
            }
            if coeffs.len() <= degree {
                coeffs.resize(degree + 1, None);
            }
            if coeffs[degree].is_some() {
                return Err(self.err(start, format!("repeated P{degree} term")));
            }
            coeffs[degree] = Some(value);
            i = j;
        }
        let mut coeffs: Vec<f64> = coeffs.into_iter().map(|c| c.unwrap_or(0.0)).collect();
        while coeffs.len() > 1 && coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs[0] != 1.0 {
            return Err(self.err(lo, "constant term must be 1"));
        }
        Ok(InputSpec::Legendre { coeffs })
    }
}

struct Pair<'a> {
    key: &'a str,
    value: &'a str,
    col: usize,
    used: bool,
}

fn take<'b>(p: &'b mut [Pair], key: &str) -> Option<(&'b str, usize)> {
    let q = p.iter_mut().find(|q| q.key == key)?;
    q.used = true;
    Some((q.value, q.col))
}

impl fmt::Display for InputSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputSpec::Gaussian { sigma } => write!(f, "gaussian:sigma={sigma}"),
            InputSpec::Optimizer { s, x, y } => write!(f, "optimizer:s={s},x={x},y={y}"),
            InputSpec::PerturbedOptimizer { s, eps, mode } => {
                write!(f, "perturbed-optimizer:s={s},eps={eps},mode={mode}")
            }
            InputSpec::Mixture { parts } => {
                f.write_str("mixture:weights=")?;
                for (i, (w, _)) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    write!(f, "{w}")?;
                }
                f.write_str(",components=")?;
                for (i, (_, p)) in parts.iter().enumerate() {
                    if i > 0 {
                        f.write_str(";")?;
                    }
                    let s = p.to_string();
                    match s.split_once(':') {
                        Some((kind, params)) => write!(f, "{kind}({params})")?,
                        None => write!(f, "{s}()")?,
                    }
                }
                Ok(())
            }
            InputSpec::SphereOptimizer { t, theta, phi } => {
                write!(f, "sphere-optimizer:t={t},theta={theta},phi={phi}")
            }
            InputSpec::BandLimitedRandom { seed, l, amplitude } => {
                f.write_str("band-limited-random:")?;
                if let Some(s) = seed {
                    write!(f, "seed={s},")?;
                }
                write!(f, "l={l},amplitude={amplitude}")
            }
            InputSpec::CirclePoisson { r, alpha, eps, k } => {
                write!(f, "circle-poisson:r={r},alpha={alpha},eps={eps},k={k}")
            }
            InputSpec::Legendre { coeffs } => {
                write!(f, "{}", coeffs[0])?;
                for (l, c) in coeffs.iter().enumerate().skip(1) {
                    if *c == 0.0 {
                        continue;
                    }
                    if c.is_sign_negative() {
                        write!(f, "{c}*P{l}")?;
                    } else {
                        write!(f, "+{c}*P{l}")?;
                    }
                }
                Ok(())
            }
            InputSpec::CriticalMass(inner) => write!(f, "8pi*{inner}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn round_trip(s: &str) -> String {
        InputSpec::parse(s).unwrap().to_string()
    }

    #[test]
    fn examples_parse() {
        assert_eq!(
            InputSpec::parse("optimizer:s=1").unwrap(),
            InputSpec::Optimizer { s: 1.0, x: 0.0, y: 0.0 }
        );
        assert_eq!(
            InputSpec::parse("gaussian:sigma=1").unwrap(),
            InputSpec::Gaussian { sigma: 1.0 }
        );
        assert_eq!(
            InputSpec::parse("gaussian").unwrap(),
            InputSpec::Gaussian { sigma: 1.0 }
        );
        assert_eq!(
            InputSpec::parse("1+0.5*P1").unwrap(),
            InputSpec::Legendre { coeffs: vec![1.0, 0.5] }
        );
        assert_eq!(
            InputSpec::parse("1-2.5e-1*P3").unwrap(),
            InputSpec::Legendre {
                coeffs: vec![1.0, 0.0, 0.0, -0.25]
            }
        );
        let ks = InputSpec::parse("8pi*optimizer:s=1").unwrap();
        assert_eq!(ks.domain(), Domain::KellerSegel);
        assert!(ks.is_radial());
        let m = InputSpec::parse("mixture:weights=0.5;0.5,components=optimizer(s=1);gaussian(sigma=2)").unwrap();
        let InputSpec::Mixture { parts } = &m else { panic!() };
        assert_eq!(parts.len(), 2);
        assert_eq!(parts[1], (0.5, InputSpec::Gaussian { sigma: 2.0 }));
        assert!(!InputSpec::parse("optimizer:s=1,x=1,y=-1").unwrap().is_radial());
    }

    #[test]
    fn canonical_forms() {
        assert_eq!(round_trip("optimizer:s=1"), "optimizer:s=1,x=0,y=0");
        assert_eq!(round_trip("1+0.5*P1"), "1+0.5*P1");
        assert_eq!(round_trip("-0.3*P2+1"), "1-0.3*P2");
        assert_eq!(round_trip("1+0*P4"), "1");
        assert_eq!(
            round_trip("mixture:components=optimizer(s=1);gaussian,weights=0.5;0.5"),
            "mixture:weights=0.5;0.5,components=optimizer(s=1,x=0,y=0);gaussian(sigma=1)"
        );
        assert_eq!(round_trip("8pi*gaussian:sigma=1"), "8pi*gaussian:sigma=1");
        assert_eq!(
            round_trip("band-limited-random:seed=7,l=3"),
            "band-limited-random:seed=7,l=3,amplitude=0.5"
        );
    }

    #[test]
    fn errors_name_position() {
        let e = InputSpec::parse("bad:spec").unwrap_err();
        assert_eq!(e.kind, ErrorKind::Parse);
        assert!(
            e.to_string().contains("column 1") && e.to_string().contains("unknown kind"),
            "{e}"
        );
        let e = InputSpec::parse("gaussian:sigma=abc").unwrap_err();
        assert!(e.to_string().contains("column 16"), "{e}");
        let e = InputSpec::parse("gaussian:sigma=1,foo=2").unwrap_err();
        assert!(
            e.to_string().contains("unknown key \"foo\"") && e.to_string().contains("column 18"),
            "{e}"
        );
        assert!(InputSpec::parse("gaussian:sigma").is_err());
        assert!(InputSpec::parse("gaussian:sigma=1,sigma=2").is_err());
        assert!(InputSpec::parse("").is_err());
        assert!(InputSpec::parse("1+0.5*P1+0.2*P1").is_err());
        assert!(InputSpec::parse("2+0.5*P1").is_err());
        assert!(InputSpec::parse("1+0.5*Q1").is_err());
        assert!(InputSpec::parse("mixture:weights=1,components=mixture(weights=1)").is_err());
        assert!(InputSpec::parse("mixture:weights=0.5,components=gaussian;optimizer").is_err());
        assert!(InputSpec::parse("mixture:weights=1,components=gaussian(sigma=1").is_err());
        assert!(InputSpec::parse("gaussian:sigma=inf").is_err());
    }

    #[test]
    fn ranges_are_enforced() {
        for s in [
            "gaussian:sigma=0",
            "optimizer:s=1000",
            "perturbed-optimizer:eps=1.5",
            "perturbed-optimizer:mode=0",
            "circle-poisson:r=1",
            "band-limited-random:l=0",
            "sphere-optimizer:theta=4",
            "8pi*circle-poisson:r=0.5",
            "mixture:weights=0;1,components=gaussian;optimizer",
            "mixture:weights=1,components=circle-poisson(r=0.2)",
        ] {
            let e = InputSpec::parse(s).unwrap_err();
            assert_eq!(e.kind, ErrorKind::Parameter, "{s}: {e}");
        }
    }

    fn planar_leaf() -> impl Strategy<Value = InputSpec> {
        prop_oneof![
            (1e-3f64..1e3).prop_map(|sigma| InputSpec::Gaussian { sigma }),
            (0.01f64..100.0, -10.0f64..10.0, -10.0f64..10.0).prop_map(|(s, x, y)| InputSpec::Optimizer { s, x, y }),
            (0.01f64..100.0, -1.0f64..1.0, 1usize..=32).prop_map(|(s, eps, mode)| InputSpec::PerturbedOptimizer {
                s,
                eps,
                mode
            }),
        ]
    }

    fn any_spec() -> impl Strategy<Value = InputSpec> {
        let legendre = prop::collection::vec(-2.0f64..2.0, 0..6).prop_map(|mut c| {
            c.insert(0, 1.0);
            while c.len() > 1 && c.last() == Some(&0.0) {
                c.pop();
            }
            InputSpec::Legendre { coeffs: c }
        });
        prop_oneof![
            planar_leaf(),
            prop::collection::vec((1e-3f64..10.0, planar_leaf()), 1..=4).prop_map(|parts| InputSpec::Mixture { parts }),
            (0.0f64..10.0, 0.0f64..3.1, -6.0f64..6.0).prop_map(|(t, theta, phi)| InputSpec::SphereOptimizer {
                t,
                theta,
                phi
            }),
            (prop::option::of(any::<u64>()), 1usize..=32, 0.0f64..5.0)
                .prop_map(|(seed, l, amplitude)| InputSpec::BandLimitedRandom { seed, l, amplitude }),
            (0.0f64..0.99, -6.0f64..6.0, -2.0f64..2.0, 1usize..=64)
                .prop_map(|(r, alpha, eps, k)| InputSpec::CirclePoisson { r, alpha, eps, k }),
            legendre,
            planar_leaf().prop_map(|p| InputSpec::CriticalMass(Box::new(p))),
        ]
    }

    proptest! {
        #[test]
        fn format_then_parse_is_identity(spec in any_spec()) {
            let text = spec.to_string();
            let back = InputSpec::parse(&text).unwrap();
            prop_assert_eq!(&back, &spec);
            prop_assert_eq!(back.to_string(), text);
        }

        #[test]
        fn parser_never_panics(s in "[a-z0-9:=,;().*+Pe-]{0,40}") {
            let _ = InputSpec::parse(&s);
        }
    }
}
