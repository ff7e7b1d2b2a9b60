//! Data-driven registry of polynomial identities between ℘ functions.
//!
//! Each identity is stored as text, `lhs = rhs`, in a tiny language:
//! `P<labels>` is a ℘ function (`P2221` is ℘₂₂₂₁), `L<k>` is λₖ, and terms
//! combine with `+ - * ^`, rational constants and parentheses. Symbols that
//! do not exist for the curve (λₖ beyond the degree, labels above the genus)
//! evaluate to zero, which is how printed forms containing them are read.
//!
//! Printed forms with misprints are kept verbatim next to their corrected
//! versions; only the corrected ones gate.

use num_complex::Complex64;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::report::ResidualReport;
use crate::sigma::WpJet;

#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Symbol {
    Wp(Vec<u8>),
    Lambda(usize),
}

/// Monomials keyed by their sorted symbol list.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Poly {
    pub terms: BTreeMap<Vec<Symbol>, f64>,
}

impl Poly {
    fn constant(c: f64) -> Poly {
        let mut p = Poly::default();
        p.terms.insert(Vec::new(), c);
        p
    }

    fn symbol(s: Symbol) -> Poly {
        let mut p = Poly::default();
        p.terms.insert(vec![s], 1.0);
        p
    }

    fn add(mut self, o: &Poly, sign: f64) -> Poly {
        for (k, v) in &o.terms {
            *self.terms.entry(k.clone()).or_insert(0.0) += sign * v;
        }
        self.terms.retain(|_, v| *v != 0.0);
        self
    }

    fn mul(&self, o: &Poly) -> Poly {
        let mut out = Poly::default();
        for (ka, va) in &self.terms {
            for (kb, vb) in &o.terms {
                let mut k = ka.clone();
                k.extend(kb.iter().cloned());
                k.sort();
                *out.terms.entry(k).or_insert(0.0) += va * vb;
            }
        }
        out.terms.retain(|_, v| *v != 0.0);
        out
    }

    fn pow(&self, n: u32) -> Poly {
        (0..n).fold(Poly::constant(1.0), |acc, _| acc.mul(self))
    }
}

struct Parser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&mut self) -> Option<u8> {
        while self.pos < self.s.len() && self.s[self.pos] == b' ' {
            self.pos += 1;
        }
        self.s.get(self.pos).copied()
    }

    fn err(&self, what: &str) -> Error {
        Error::InvalidArgument(format!(
            "identity parse error at {}: {what} in `{}`",
            self.pos,
            String::from_utf8_lossy(self.s)
        ))
    }

    fn expr(&mut self) -> Result<Poly> {
        let mut acc = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Poly::default().add(&self.term()?, -1.0)
            }
            Some(b'+') => {
                self.pos += 1;
                self.term()?
            }
            _ => self.term()?,
        };
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?, 1.0);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.add(&self.term()?, -1.0);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Poly> {
        let mut acc = self.power()?;
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = acc.mul(&self.power()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    let d = self.number()?;
                    acc = acc.mul(&Poly::constant(1.0 / d));
                }
                _ => return Ok(acc),
            }
        }
    }

    fn power(&mut self) -> Result<Poly> {
        let base = self.atom()?;
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let n = self.number()?;
            if n.fract() != 0.0 || n < 0.0 {
                return Err(self.err("exponent must be a non-negative integer"));
            }
            return Ok(base.pow(n as u32));
        }
        Ok(base)
    }

    fn digits(&mut self) -> &'a [u8] {
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        &self.s[start..self.pos]
    }

    fn number(&mut self) -> Result<f64> {
        self.peek();
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_digit() || self.s[self.pos] == b'.') {
            self.pos += 1;
        }
        std::str::from_utf8(&self.s[start..self.pos])
            .ok()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| self.err("expected a number"))
    }

    fn atom(&mut self) -> Result<Poly> {
        match self.peek() {
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                if self.peek() != Some(b')') {
                    return Err(self.err("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(b'P') => {
                self.pos += 1;
                let d = self.digits();
                if !(2..=4).contains(&d.len()) {
                    return Err(self.err("℘ needs 2 to 4 labels"));
                }
                Ok(Poly::symbol(Symbol::Wp(d.iter().map(|b| b - b'0').collect())))
            }
            Some(b'L') => {
                self.pos += 1;
                let d = self.digits();
                let k = std::str::from_utf8(d).unwrap().parse().map_err(|_| self.err("bad λ index"))?;
                Ok(Poly::symbol(Symbol::Lambda(k)))
            }
            Some(c) if c.is_ascii_digit() => Ok(Poly::constant(self.number()?)),
            _ => Err(self.err("unexpected input")),
        }
    }
}

/// Parse `lhs = rhs` into the polynomial `lhs − rhs`.
pub fn parse_identity(text: &str) -> Result<Poly> {
    let (l, r) = text
        .split_once('=')
        .ok_or_else(|| Error::InvalidArgument(format!("identity `{text}` has no `=`")))?;
    let parse = |s: &str| {
        let mut p = Parser { s: s.as_bytes(), pos: 0 };
        let e = p.expr()?;
        if p.peek().is_some() {
            return Err(p.err("trailing input"));
        }
        Ok(e)
    };
    Ok(parse(l)?.add(&parse(r)?, -1.0))
}

/// Values for the symbols of an identity.
pub trait SymbolValues {
    fn value(&self, s: &Symbol) -> Complex64;
}

pub struct JetValues<'a> {
    pub jet: &'a WpJet,
    pub lambdas: &'a [Complex64],
}

impl SymbolValues for JetValues<'_> {
    fn value(&self, s: &Symbol) -> Complex64 {
        match s {
            Symbol::Lambda(k) => self.lambdas.get(*k).copied().unwrap_or_default(),
            Symbol::Wp(l) => {
                if l.iter().any(|&x| x == 0 || x as usize > self.jet.genus()) {
                    Complex64::new(0.0, 0.0)
                } else {
                    self.jet.wp(l)
                }
            }
        }
    }
}

/// `(Σ monomials, largest |monomial|)`.
pub fn evaluate(p: &Poly, vals: &dyn SymbolValues) -> (Complex64, f64) {
    let mut sum = Complex64::new(0.0, 0.0);
    let mut big: f64 = 0.0;
    for (syms, c) in &p.terms {
        let v = syms.iter().fold(Complex64::new(*c, 0.0), |acc, s| acc * vals.value(s));
        big = big.max(v.norm());
        sum += v;
    }
    (sum, big)
}

/// Residual relative to the largest monomial.
pub fn relative_residual(p: &Poly, vals: &dyn SymbolValues) -> f64 {
    let (s, big) = evaluate(p, vals);
    if big == 0.0 {
        s.norm()
    } else {
        s.norm() / big
    }
}

#[derive(Clone, Copy, Debug)]
pub struct Identity {
    pub name: &'static str,
    pub genus: usize,
    /// As printed, misprints included.
    pub literal: &'static str,
    /// Corrected form, `None` when the printed one is already right.
    pub corrected: Option<&'static str>,
}

impl Identity {
    pub fn gating_form(&self) -> &'static str {
        self.corrected.unwrap_or(self.literal)
    }
}

pub const REGISTRY: &[Identity] = &[
    Identity {
        name: "wp2222",
        genus: 2,
        literal: "P2222 - 6*P22^2 = 2*L3*L5 + 4*L4*P22 + 4*L5*P21 - 12*L6*P11",
        corrected: None,
    },
    Identity {
        name: "wp2221",
        genus: 2,
        literal: "P2221 - 6*P22*P21 = 4*L4*P21 - 2*L5*P11",
        corrected: None,
    },
    Identity {
        name: "wp2211",
        genus: 2,
        literal: "P2211 - 4*P21^2 - 2*P22*P11 = 4*L2*P31 + 2*L3*P21",
        corrected: Some("P2211 - 4*P21^2 - 2*P22*P11 = 2*L3*P21"),
    },
    Identity {
        name: "wp2111",
        genus: 2,
        literal: "P2111 - 6*P21*P11 = -2*L0*L5 - 2*L1*P22 + 4*L2*P21",
        corrected: Some("P2111 - 6*P21*P11 = -4*L0*L5 - 2*L1*P22 + 4*L2*P21"),
    },
    Identity {
        name: "wp1111",
        genus: 2,
        literal: "P1111 - 6*P11^2 = -4*L0*L4 + 2*L1*L3 - 12*L0*P22 + 4*L1*P21 + 4*L2*P11",
        corrected: Some("P1111 - 6*P11^2 = -8*L0*L4 + 2*L1*L3 - 12*L0*P22 + 4*L1*P21 + 4*L2*P11"),
    },
    Identity {
        name: "wp112-linear",
        genus: 2,
        literal: "P112 = P222*P12 + P122*P22",
        corrected: Some("P112 = P222*P12 - P122*P22"),
    },
    Identity {
        name: "wp222-squared",
        genus: 2,
        literal: "P222^2 = 4*(P22^3 + P12*P22 + L4*P22^2 + P11 + L3*P22 + L2)",
        corrected: None,
    },
    Identity {
        name: "wp222-wp221",
        genus: 2,
        literal: "P222*P221 = 4*(P12*P22^2 - 1/2*(P11*P22 - P12^2 + L3*P12 - L1) + L3*P12 + L4*P12*P22)",
        corrected: None,
    },
    Identity {
        name: "wp221-squared",
        genus: 2,
        // the printed bracket never closes; it is closed at the end
        literal: "P221^2 = 4*(P11*P22^2 - (P11*P22 - P12^2 + L3*P12 - L1)*P22 - P11*P12 + L4*P11*P22 \
                  + L3*P12*P22 - L4*(P11*P22 - P12^2 + L3*P12 - L1) + L4*L3*P12 - L1*P22 - L1*L4 + L0)",
        corrected: Some("P221^2 = 4*(P12^2*P22 - P11*P12 + L4*P12^2 + L0)"),
    },
    Identity {
        name: "wp111-squared",
        genus: 1,
        literal: "P111^2 = 4*(P11^3 + L2*P11^2 + L1*P11 + L0)",
        corrected: None,
    },
    Identity {
        name: "wp1111",
        genus: 1,
        literal: "P1111 = 6*P11^2 + 4*L2*P11 + 2*L1",
        corrected: None,
    },
];

/// Evaluate every registered identity of the jet's genus. Corrected forms
/// gate at `tol`; printed forms that differ are added as diagnostics.
pub fn identity_registry(jet: &WpJet, lambdas: &[Complex64], inputs: &str, tol: f64) -> Result<Vec<ResidualReport>> {
    let vals = JetValues { jet, lambdas };
    let mut out = Vec::new();
    for id in REGISTRY.iter().filter(|i| i.genus == jet.genus()) {
        let gate = parse_identity(id.gating_form())?;
        out.push(ResidualReport::gating(
            "kleinian",
            &format!("{}/corrected", id.name),
            id.gating_form(),
            inputs,
            relative_residual(&gate, &vals),
            tol,
        ));
        if id.corrected.is_some() {
            let lit = parse_identity(id.literal)?;
            out.push(ResidualReport::diagnostic(
                "kleinian",
                &format!("{}/literal", id.name),
                id.literal,
                inputs,
                relative_residual(&lit, &vals),
                tol,
            ));
        }
    }
    Ok(out)
}
