//! Versioned plain-text phase and landmark files.
//!
//! Phase file:
//!
//! ```text
//! lddmm-phase 1 <d> <N> <k>
//! q(d) p(d) [q1(d²) mu1(d²)] [q2(d³) mu2(d³)]     one row per particle
//! ```
//!
//! Matrices are row-major, rank-3 tensors `t[a][b][c]` with `c` fastest.
//! Landmark file:
//!
//! ```text
//! lddmm-landmarks 1 <d> <N>
//! x(d)                                            one row per landmark
//! ```
//!
//! Blank lines and lines starting with `#` are ignored. Numbers are written
//! with 17 significant digits so `f64` values survive a round trip exactly.

use std::fmt::Write as _;
use std::path::Path;

use super::{relative_asymmetry, JetMomentum, JetOrder, JetState, PhasePoint, SYMMETRY_TOLERANCE};
use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::tensor::{zero_mat, zero_ten3, Mat3, Ten3, Vec3};

pub const PHASE_HEADER: &str = "lddmm-phase";
pub const LANDMARK_HEADER: &str = "lddmm-landmarks";
const VERSION: &str = "1";

pub fn format_float(v: f64) -> String {
    format!("{v:.16e}")
}

/// Content lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn parse_err(line: usize, field: Option<String>, msg: impl Into<String>) -> Error {
    Error::Parse {
        line,
        field,
        msg: msg.into(),
    }
}

struct Header {
    line: usize,
    values: Vec<usize>,
}

fn read_header<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    name: &str,
    fields: &[&str],
) -> Result<Header> {
    let (line, text) = lines
        .next()
        .ok_or_else(|| parse_err(1, None, format!("missing `{name}` header")))?;
    let mut tok = text.split_whitespace();
    if tok.next() != Some(name) {
        return Err(parse_err(line, Some("format".into()), format!("expected `{name}`")));
    }
    match tok.next() {
        Some(VERSION) => {}
        Some(v) => {
            return Err(parse_err(
                line,
                Some("version".into()),
                format!("unsupported version `{v}`"),
            ))
        }
        None => return Err(parse_err(line, Some("version".into()), "missing")),
    }
    let mut values = Vec::with_capacity(fields.len());
    for f in fields {
        let t = tok
            .next()
            .ok_or_else(|| parse_err(line, Some((*f).into()), "missing"))?;
        let v = t
            .parse::<usize>()
            .map_err(|_| parse_err(line, Some((*f).into()), format!("`{t}` is not a count")))?;
        values.push(v);
    }
    if let Some(extra) = tok.next() {
        return Err(parse_err(line, None, format!("unexpected token `{extra}` in header")));
    }
    Ok(Header { line, values })
}

struct Row<'a> {
    line: usize,
    tokens: Vec<&'a str>,
    pos: usize,
}

impl<'a> Row<'a> {
    fn new(line: usize, text: &'a str) -> Self {
        Self {
            line,
            tokens: text.split_whitespace().collect(),
            pos: 0,
        }
    }

    fn take<T: Scalar>(&mut self, field: impl Fn() -> String) -> Result<T> {
        let t = self
            .tokens
            .get(self.pos)
            .ok_or_else(|| parse_err(self.line, Some(field()), "missing value"))?;
        self.pos += 1;
        let v: f64 = t
            .parse()
            .map_err(|_| parse_err(self.line, Some(field()), format!("`{t}` is not a number")))?;
        if !v.is_finite() {
            return Err(parse_err(self.line, Some(field()), "value is not finite"));
        }
        Ok(T::from_f64(v))
    }

    fn vec<T: Scalar>(&mut self, d: usize, name: &str) -> Result<Vec3<T>> {
        let mut v = [T::zero(); 3];
        for (a, slot) in v.iter_mut().enumerate().take(d) {
            *slot = self.take(|| format!("{name}[{a}]"))?;
        }
        Ok(v)
    }

    fn mat<T: Scalar>(&mut self, d: usize, name: &str) -> Result<Mat3<T>> {
        let mut m = zero_mat();
        for a in 0..d {
            for b in 0..d {
                m[a][b] = self.take(|| format!("{name}[{a}][{b}]"))?;
            }
        }
        Ok(m)
    }

    fn ten<T: Scalar>(&mut self, d: usize, name: &str) -> Result<Ten3<T>> {
        let mut t = zero_ten3();
        for a in 0..d {
            for b in 0..d {
                for c in 0..d {
                    t[a][b][c] = self.take(|| format!("{name}[{a}][{b}][{c}]"))?;
                }
            }
        }
        Ok(t)
    }

    fn finish(&self) -> Result<()> {
        if self.pos < self.tokens.len() {
            return Err(parse_err(
                self.line,
                None,
                format!("{} trailing values", self.tokens.len() - self.pos),
            ));
        }
        Ok(())
    }
}

/// Parse a phase file from text.
pub fn parse_phase_point<T: Scalar>(text: &str) -> Result<PhasePoint<T>> {
    let mut lines = content_lines(text);
    let header = read_header(&mut lines, PHASE_HEADER, &["d", "N", "k"])?;
    let (d, n, k) = (header.values[0], header.values[1], header.values[2]);
    if d != 2 && d != 3 {
        return Err(parse_err(header.line, Some("d".into()), format!("dimension {d} not in {{2, 3}}")));
    }
    let order = JetOrder::from_usize(k)
        .map_err(|_| parse_err(header.line, Some("k".into()), format!("jet order {k} not in {{0, 1, 2}}")))?;
    let mut q = Vec::with_capacity(n);
    let mut p = Vec::with_capacity(n);
    let mut q1 = Vec::new();
    let mut mu1 = Vec::new();
    let mut q2 = Vec::new();
    let mut mu2 = Vec::new();
    let mut last_line = header.line;
    for i in 0..n {
        let (line, text) = lines.next().ok_or_else(|| {
            parse_err(last_line + 1, None, format!("expected {n} particle rows, found {i}"))
        })?;
        last_line = line;
        let mut row = Row::new(line, text);
        q.push(row.vec(d, "q")?);
        p.push(row.vec(d, "p")?);
        if order >= JetOrder::One {
            q1.push(row.mat(d, "q1")?);
            mu1.push(row.mat(d, "mu1")?);
        }
        if order >= JetOrder::Two {
            let h: Ten3<T> = row.ten(d, "q2")?;
            check_symmetric(d, &h, "hessian", i)?;
            q2.push(h);
            let m: Ten3<T> = row.ten(d, "mu2")?;
            check_symmetric(d, &m, "mu2", i)?;
            mu2.push(m);
        }
        row.finish()?;
    }
    if let Some((line, _)) = lines.next() {
        return Err(parse_err(line, None, format!("more than the declared {n} particle rows")));
    }
    let state = JetState::new(d, order, q, q1, q2)?;
    let momentum = JetMomentum::new(d, order, p, mu1, mu2)?;
    PhasePoint::new(state, momentum)
}

fn check_symmetric<T: Scalar>(d: usize, t: &Ten3<T>, what: &'static str, particle: usize) -> Result<()> {
    let dev = relative_asymmetry(d, t);
    if dev > SYMMETRY_TOLERANCE {
        return Err(Error::Asymmetric {
            what,
            particle,
            deviation: dev,
        });
    }
    Ok(())
}

/// Render a phase point in the phase file format.
pub fn format_phase_point<T: Scalar>(x: &PhasePoint<T>) -> String {
    let d = x.dim();
    let k = x.order();
    let mut out = format!("{PHASE_HEADER} {VERSION} {d} {} {}\n", x.len(), k.as_usize());
    let s = &x.state;
    let m = &x.momentum;
    for i in 0..x.len() {
        let mut vals: Vec<f64> = Vec::new();
        let push_vec = |v: &Vec3<T>, vals: &mut Vec<f64>| vals.extend(v.iter().take(d).map(|c| c.to_f64()));
        let push_mat = |mat: &Mat3<T>, vals: &mut Vec<f64>| {
            for row in mat.iter().take(d) {
                vals.extend(row.iter().take(d).map(|c| c.to_f64()));
            }
        };
        let push_ten = |t: &Ten3<T>, vals: &mut Vec<f64>| {
            for mat in t.iter().take(d) {
                for row in mat.iter().take(d) {
                    vals.extend(row.iter().take(d).map(|c| c.to_f64()));
                }
            }
        };
        push_vec(&s.positions()[i], &mut vals);
        push_vec(&m.p()[i], &mut vals);
        if k >= JetOrder::One {
            push_mat(&s.jacobians()[i], &mut vals);
            push_mat(&m.mu1()[i], &mut vals);
        }
        if k >= JetOrder::Two {
            push_ten(&s.hessians()[i], &mut vals);
            push_ten(&m.mu2()[i], &mut vals);
        }
        let row: Vec<String> = vals.into_iter().map(format_float).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn read_state<T: Scalar>(path: impl AsRef<Path>) -> Result<PhasePoint<T>> {
    let text = std::fs::read_to_string(path)?;
    parse_phase_point(&text)
}

pub fn write_state<T: Scalar>(path: impl AsRef<Path>, x: &PhasePoint<T>) -> Result<()> {
    std::fs::write(path, format_phase_point(x))?;
    Ok(())
}

/// Parse a landmark file into an order-0 state.
pub fn parse_landmarks<T: Scalar>(text: &str) -> Result<JetState<T>> {
    let mut lines = content_lines(text);
    let header = read_header(&mut lines, LANDMARK_HEADER, &["d", "N"])?;
    let (d, n) = (header.values[0], header.values[1]);
    if d != 2 && d != 3 {
        return Err(parse_err(header.line, Some("d".into()), format!("dimension {d} not in {{2, 3}}")));
    }
    let mut q = Vec::with_capacity(n);
    let mut last_line = header.line;
    for i in 0..n {
        let (line, text) = lines.next().ok_or_else(|| {
            parse_err(last_line + 1, None, format!("expected {n} landmark rows, found {i}"))
        })?;
        last_line = line;
        let mut row = Row::new(line, text);
        q.push(row.vec(d, "x")?);
        row.finish()?;
    }
    if let Some((line, _)) = lines.next() {
        return Err(parse_err(line, None, format!("more than the declared {n} landmark rows")));
    }
    JetState::from_positions(d, q)
}

pub fn read_landmarks<T: Scalar>(path: impl AsRef<Path>) -> Result<JetState<T>> {
    let text = std::fs::read_to_string(path)?;
    parse_landmarks(&text)
}

pub fn format_landmarks<T: Scalar>(dim: usize, points: &[Vec3<T>]) -> String {
    let mut out = format!("{LANDMARK_HEADER} {VERSION} {dim} {}\n", points.len());
    for p in points {
        let row: Vec<String> = p.iter().take(dim).map(|c| format_float(c.to_f64())).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn write_landmarks<T: Scalar>(path: impl AsRef<Path>, dim: usize, points: &[Vec3<T>]) -> Result<()> {
    std::fs::write(path, format_landmarks(dim, points))?;
    Ok(())
}
