//! The textual structure-file format shared with the CLI.
//!
//! Keyed sections, whitespace-insensitive, `#` comments:
//!
//! ```text
//! [ring]
//! rationals                  # or: polynomials <n>
//! [cutoff]
//! 2/1                        # optional energy cutoff
//! [basis]
//! a 1 0                      # name codim ls
//! [monoid]
//! E=1/1,mu=2                 # zero or more generators
//! [ops]
//! 1 ; E=0/1,mu=0 ; a -> (-1/1)*b
//! 0 ; E=1/1,mu=2 ;  -> (1/1)*1
//! [unit]
//! 1
//! [pairing]
//! 2 1                        # degree shift p q, then entries
//! a , q -> 1/1
//! [d]                        # T*-module sections: matrices by columns
//! a -> (1/1)*b
//! [iota_1]
//! a -> (1/1)*1
//! [lie_1]
//! ```
//!
//! Morphism files reuse the ops syntax under `[components]`. Rationals and
//! polynomial coefficients use the scalar literals; coefficients in sums
//! are parenthesized so polynomial sums never collide with term sums.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use thiserror::Error;

use crate::ainfty::{AInftyStructure, Pairing};
use crate::equivariant::TStarModule;
use crate::grading::Bidegree;
use crate::matrix::GradedMatrix;
use crate::module::{GradedModule, ModuleElt, ModuleRef};
use crate::novikov::{GappedMonoid, MonoidElt};
use crate::scalar::{parse_rational, parse_ring_elt, CoefficientRing, Rational};
use num_traits::Zero;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("parse error at line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError { line, message: message.into() }
}

/// A parsed structure or T*-module file.
#[derive(Debug, Clone)]
pub struct StructureFile {
    pub module: ModuleRef,
    pub monoid: GappedMonoid,
    pub cutoff: Rational,
    pub ops: Vec<(usize, MonoidElt, Vec<usize>, ModuleElt)>,
    pub components: Vec<(usize, MonoidElt, Vec<usize>, ModuleElt)>,
    pub unit: Option<usize>,
    pub pairing: Option<Pairing>,
    pub d: Option<GradedMatrix>,
    pub iota: Vec<GradedMatrix>,
    pub lie: Vec<GradedMatrix>,
}

impl StructureFile {
    /// Assembles the twisted structure when the file carries one.
    pub fn to_structure(&self) -> Result<AInftyStructure, ParseError> {
        let mut a =
            AInftyStructure::new(self.module.clone(), self.monoid.clone(), self.cutoff.clone());
        for (k, beta, inputs, value) in &self.ops {
            a.insert_op(*k, beta.clone(), inputs.clone(), value.clone())
                .map_err(|e| err(0, format!("invalid operation: {e}")))?;
        }
        if let Some(e) = self.unit {
            a.set_unit(e).map_err(|e| err(0, format!("invalid unit: {e}")))?;
        }
        if let Some(p) = &self.pairing {
            a.set_pairing(p.clone());
        }
        Ok(a)
    }

    /// Assembles the T*-module when the file carries [d] and [iota_a].
    pub fn to_tstar(&self) -> Option<TStarModule> {
        let d = self.d.clone()?;
        if self.iota.is_empty() {
            return None;
        }
        Some(TStarModule {
            module: self.module.clone(),
            d,
            iota: self.iota.clone(),
            lie: self.lie.clone(),
        })
    }

    pub fn is_tstar(&self) -> bool {
        self.d.is_some() && !self.iota.is_empty()
    }
}

fn split_terms(value: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0;
    let mut start = 0;
    for (i, ch) in value.char_indices() {
        match ch {
            '(' => depth += 1,
            ')' => depth -= 1,
            '+' if depth == 0 => {
                out.push(value[start..i].trim());
                start = i + 1;
            }
            _ => {}
        }
    }
    out.push(value[start..].trim());
    out.into_iter().filter(|s| !s.is_empty()).collect()
}

fn parse_value(
    s: &str,
    module: &GradedModule,
    line: usize,
) -> Result<ModuleElt, ParseError> {
    let s = s.trim();
    if s == "0" {
        return Ok(ModuleElt::zero());
    }
    let mut out = ModuleElt::zero();
    for term in split_terms(s) {
        let (coeff_s, name) = term
            .rsplit_once('*')
            .ok_or_else(|| err(line, format!("expected coeff*name in {term:?}")))?;
        let coeff_s = coeff_s.trim();
        let coeff_s = coeff_s
            .strip_prefix('(')
            .and_then(|c| c.strip_suffix(')'))
            .unwrap_or(coeff_s);
        let coeff = parse_ring_elt(coeff_s, module.ring())
            .map_err(|e| err(line, format!("bad coefficient: {e}")))?;
        let idx = module
            .index_of(name.trim())
            .ok_or_else(|| err(line, format!("unknown basis name {name:?}")))?;
        out.add_term(idx, &coeff);
    }
    Ok(out)
}

fn render_value(module: &GradedModule, value: &ModuleElt) -> String {
    if value.is_zero() {
        return "0".into();
    }
    value
        .terms()
        .map(|(i, c)| format!("({})*{}", c, module.name(i)))
        .collect::<Vec<_>>()
        .join(" + ")
}

/// Parses the documented file format.
pub fn parse(text: &str) -> Result<StructureFile, ParseError> {
    let mut sections: Vec<(String, Vec<(usize, String)>)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            sections.push((name.trim().to_string(), Vec::new()));
        } else {
            let Some(section) = sections.last_mut() else {
                return Err(err(line_no, "content before the first [section] header"));
            };
            section.1.push((line_no, line.to_string()));
        }
    }

    let find = |name: &str| sections.iter().find(|(n, _)| n == name).map(|(_, l)| l.clone());

    // [ring]
    let ring_lines = find("ring").ok_or_else(|| err(0, "missing [ring] section"))?;
    let (ring_line_no, ring_spec) =
        ring_lines.first().ok_or_else(|| err(0, "[ring] section is empty"))?;
    let ring = {
        let mut it = ring_spec.split_whitespace();
        match (it.next(), it.next()) {
            (Some("rationals"), None) => CoefficientRing::Rationals,
            (Some("polynomials"), Some(n)) => CoefficientRing::Polynomials {
                num_alphas: n
                    .parse()
                    .map_err(|_| err(*ring_line_no, "bad alpha count"))?,
            },
            _ => return Err(err(*ring_line_no, "expected `rationals` or `polynomials <n>`")),
        }
    };

    // [basis]
    let basis_lines = find("basis").ok_or_else(|| err(0, "missing [basis] section"))?;
    let mut basis = Vec::new();
    for (line_no, line) in &basis_lines {
        let mut it = line.split_whitespace();
        let name = it.next().ok_or_else(|| err(*line_no, "missing basis name"))?;
        let codim: i64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err(*line_no, "missing codimension"))?;
        let ls: i64 = it
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| err(*line_no, "missing local-system degree"))?;
        basis.push((name.to_string(), Bidegree::new(codim, ls)));
    }
    let module: ModuleRef = Arc::new(GradedModule::new(ring, basis));

    // [monoid]
    let mut generators = Vec::new();
    if let Some(lines) = find("monoid") {
        for (line_no, line) in &lines {
            generators.push(
                MonoidElt::parse(line).map_err(|e| err(*line_no, format!("bad generator: {e}")))?,
            );
        }
    }
    let monoid = GappedMonoid::new(generators).map_err(|e| err(0, format!("bad monoid: {e}")))?;

    // [cutoff]
    let cutoff = match find("cutoff") {
        Some(lines) => {
            let (line_no, line) =
                lines.first().ok_or_else(|| err(0, "[cutoff] section is empty"))?;
            parse_rational(line).map_err(|e| err(*line_no, format!("bad cutoff: {e}")))?
        }
        None => Rational::zero(),
    };

    // Ops-style sections.
    let parse_ops_lines =
        |lines: &[(usize, String)]| -> Result<Vec<(usize, MonoidElt, Vec<usize>, ModuleElt)>, ParseError> {
            let mut out = Vec::new();
            for (line_no, line) in lines {
                let mut parts = line.splitn(3, ';');
                let k: usize = parts
                    .next()
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| err(*line_no, "missing arity"))?;
                let beta = MonoidElt::parse(
                    parts.next().ok_or_else(|| err(*line_no, "missing monoid element"))?.trim(),
                )
                .map_err(|e| err(*line_no, format!("bad monoid element: {e}")))?;
                let rest = parts.next().ok_or_else(|| err(*line_no, "missing inputs"))?;
                let (inputs_s, value_s) = rest
                    .split_once("->")
                    .ok_or_else(|| err(*line_no, "missing `->`"))?;
                let inputs: Vec<usize> = inputs_s
                    .split(',')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|name| {
                        module
                            .index_of(name)
                            .ok_or_else(|| err(*line_no, format!("unknown input {name:?}")))
                    })
                    .collect::<Result<_, _>>()?;
                if inputs.len() != k {
                    return Err(err(*line_no, format!("arity {k} but {} inputs", inputs.len())));
                }
                let value = parse_value(value_s, &module, *line_no)?;
                out.push((k, beta, inputs, value));
            }
            Ok(out)
        };
    let ops = match find("ops") {
        Some(lines) => parse_ops_lines(&lines)?,
        None => Vec::new(),
    };
    let components = match find("components") {
        Some(lines) => parse_ops_lines(&lines)?,
        None => Vec::new(),
    };

    // [unit]
    let unit = match find("unit") {
        Some(lines) => {
            let (line_no, line) =
                lines.first().ok_or_else(|| err(0, "[unit] section is empty"))?;
            Some(
                module
                    .index_of(line.trim())
                    .ok_or_else(|| err(*line_no, format!("unknown unit {line:?}")))?,
            )
        }
        None => None,
    };

    // [pairing]
    let pairing = match find("pairing") {
        Some(lines) => {
            let mut it = lines.iter();
            let (line_no, shift_line) =
                it.next().ok_or_else(|| err(0, "[pairing] section is empty"))?;
            let mut parts = shift_line.split_whitespace();
            let p: i64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(*line_no, "missing pairing codim shift"))?;
            let q: i64 = parts
                .next()
                .and_then(|s| s.parse().ok())
                .ok_or_else(|| err(*line_no, "missing pairing ls shift"))?;
            let mut pairing = Pairing::new((p, q.rem_euclid(2) as u8));
            for (line_no, line) in it {
                let (pair_s, value_s) = line
                    .split_once("->")
                    .ok_or_else(|| err(*line_no, "missing `->` in pairing entry"))?;
                let (x, y) = pair_s
                    .split_once(',')
                    .ok_or_else(|| err(*line_no, "expected `x , y` in pairing entry"))?;
                let i = module
                    .index_of(x.trim())
                    .ok_or_else(|| err(*line_no, format!("unknown basis name {x:?}")))?;
                let j = module
                    .index_of(y.trim())
                    .ok_or_else(|| err(*line_no, format!("unknown basis name {y:?}")))?;
                let value = parse_ring_elt(value_s.trim(), ring)
                    .map_err(|e| err(*line_no, format!("bad pairing value: {e}")))?;
                pairing
                    .insert(&module, i, j, value)
                    .map_err(|e| err(*line_no, format!("bad pairing entry: {e}")))?;
            }
            Some(pairing)
        }
        None => None,
    };

    // Matrix sections: [d], [iota_a], [lie_a].
    let parse_matrix = |lines: &[(usize, String)], degree: Bidegree| -> Result<GradedMatrix, ParseError> {
        let mut m = GradedMatrix::zero(module.clone(), module.clone(), degree);
        for (line_no, line) in lines {
            let (name, value_s) = line
                .split_once("->")
                .ok_or_else(|| err(*line_no, "missing `->` in matrix entry"))?;
            let s = module
                .index_of(name.trim())
                .ok_or_else(|| err(*line_no, format!("unknown basis name {name:?}")))?;
            let value = parse_value(value_s, &module, *line_no)?;
            for (t, c) in value.terms() {
                m.add_entry(t, s, c)
                    .map_err(|e| err(*line_no, format!("bad matrix entry: {e}")))?;
            }
        }
        Ok(m)
    };
    let d = match find("d") {
        Some(lines) => Some(parse_matrix(&lines, Bidegree::new(1, 0))?),
        None => None,
    };
    let mut iota = Vec::new();
    let mut lie = Vec::new();
    for a in 1.. {
        let (i_lines, l_lines) = (find(&format!("iota_{a}")), find(&format!("lie_{a}")));
        if i_lines.is_none() && l_lines.is_none() {
            break;
        }
        iota.push(parse_matrix(&i_lines.unwrap_or_default(), Bidegree::new(-1, 0))?);
        lie.push(parse_matrix(&l_lines.unwrap_or_default(), Bidegree::ZERO)?);
    }

    Ok(StructureFile { module, monoid, cutoff, ops, components, unit, pairing, d, iota, lie })
}

fn render_header(out: &mut String, module: &GradedModule, monoid: &GappedMonoid, cutoff: &Rational) {
    let _ = writeln!(out, "[ring]");
    let _ = writeln!(out, "{}", module.ring());
    let _ = writeln!(out, "[cutoff]");
    let _ = writeln!(out, "{}/{}", cutoff.numer(), cutoff.denom());
    let _ = writeln!(out, "[basis]");
    for (name, deg) in module.basis() {
        let _ = writeln!(out, "{} {} {}", name, deg.codim, deg.ls);
    }
    let _ = writeln!(out, "[monoid]");
    for g in monoid.generators() {
        let _ = writeln!(out, "{g}");
    }
}

fn render_ops(
    out: &mut String,
    section: &str,
    module: &GradedModule,
    comps: &BTreeMap<(usize, MonoidElt), BTreeMap<Vec<usize>, ModuleElt>>,
) {
    let _ = writeln!(out, "[{section}]");
    for ((k, beta), tuples) in comps {
        for (tuple, value) in tuples {
            if value.is_zero() {
                continue;
            }
            let inputs =
                tuple.iter().map(|&i| module.name(i).to_string()).collect::<Vec<_>>().join(",");
            let _ = writeln!(out, "{k} ; {beta} ; {inputs} -> {}", render_value(module, value));
        }
    }
}

/// Serializes a structure in the documented format; output is
/// deterministic and reparses to an identical structure.
pub fn serialize_structure(a: &AInftyStructure) -> String {
    let module = a.module().as_ref();
    let mut out = String::new();
    render_header(&mut out, module, a.monoid(), a.cutoff());
    render_ops(&mut out, "ops", module, &a.ops().comps);
    if let Some(e) = a.unit() {
        let _ = writeln!(out, "[unit]");
        let _ = writeln!(out, "{}", module.name(e));
    }
    if let Some(p) = a.pairing() {
        let _ = writeln!(out, "[pairing]");
        let (ps, qs) = p.shift();
        let _ = writeln!(out, "{ps} {qs}");
        for ((i, j), v) in p.entries() {
            let _ = writeln!(out, "{} , {} -> {}", module.name(*i), module.name(*j), v);
        }
    }
    out
}

fn render_matrix(out: &mut String, section: &str, module: &GradedModule, m: &GradedMatrix) {
    let _ = writeln!(out, "[{section}]");
    for s in 0..module.dim() {
        let col = m.column(s);
        if col.is_zero() {
            continue;
        }
        let _ = writeln!(out, "{} -> {}", module.name(s), render_value(module, &col));
    }
}

/// Serializes a T*-module, optionally with the pairing and unit of an
/// associated structure and an invariant deformation's operations.
pub fn serialize_tstar(
    t: &TStarModule,
    structure: Option<&AInftyStructure>,
) -> String {
    let module = t.module.as_ref();
    let mut out = String::new();
    match structure {
        Some(a) => {
            render_header(&mut out, module, a.monoid(), a.cutoff());
            render_ops(&mut out, "ops", module, &a.ops().comps);
            if let Some(e) = a.unit() {
                let _ = writeln!(out, "[unit]");
                let _ = writeln!(out, "{}", module.name(e));
            }
            if let Some(p) = a.pairing() {
                let _ = writeln!(out, "[pairing]");
                let (ps, qs) = p.shift();
                let _ = writeln!(out, "{ps} {qs}");
                for ((i, j), v) in p.entries() {
                    let _ = writeln!(out, "{} , {} -> {}", module.name(*i), module.name(*j), v);
                }
            }
        }
        None => {
            render_header(&mut out, module, &GappedMonoid::trivial(), &Rational::zero());
        }
    }
    render_matrix(&mut out, "d", module, &t.d);
    for (a, iota) in t.iota.iter().enumerate() {
        render_matrix(&mut out, &format!("iota_{}", a + 1), module, iota);
    }
    for (a, lie) in t.lie.iter().enumerate() {
        render_matrix(&mut out, &format!("lie_{}", a + 1), module, lie);
    }
    out
}

/// Serializes morphism components in the shared syntax.
pub fn serialize_morphism(f: &crate::morphism::AInftyMorphism) -> String {
    let module = f.source().module().as_ref();
    let mut out = String::new();
    render_header(&mut out, module, f.source().monoid(), &f.cutoff());
    render_ops(&mut out, "components", module, &f.components().comps);
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn fixtures_round_trip_through_the_format() {
        for name in fixtures::ALL_FIXTURES {
            let f = fixtures::build_fixture(name).unwrap();
            let text = serialize_structure(&f.structure);
            let parsed = parse(&text).unwrap();
            let back = parsed.to_structure().unwrap();
            assert_eq!(&back, &f.structure, "{name} round trip");
            // Serialization is stable.
            assert_eq!(serialize_structure(&back), text, "{name} stability");
        }
    }

    #[test]
    fn tstar_round_trip() {
        let f = fixtures::build_fixture("M6i").unwrap();
        let t = f.tstar.unwrap();
        let text = serialize_tstar(&t, Some(&f.structure));
        let parsed = parse(&text).unwrap();
        assert!(parsed.is_tstar());
        let back = parsed.to_tstar().unwrap();
        assert_eq!(back.d, t.d);
        assert_eq!(back.iota, t.iota);
        assert_eq!(back.lie, t.lie);
        assert_eq!(parsed.to_structure().unwrap(), f.structure);
    }

    #[test]
    fn whitespace_and_comments_are_tolerated() {
        let text = "\n# a point\n[ring]\n  rationals  \n[basis]\n  1   0  0 # the unit\n[ops]\n 2 ;  E=0/1,mu=0 ;  1 , 1   ->  ( 1/1 )*1\n[unit]\n 1\n";
        let parsed = parse(text).unwrap();
        let a = parsed.to_structure().unwrap();
        assert_eq!(a.module().dim(), 1);
        assert_eq!(a.unit(), Some(0));
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "[ring]\nrationals\n[basis]\nx 0 0\n[ops]\n2 ; E=0/1,mu=0 ; x,y -> (1/1)*x\n";
        let e = parse(text).unwrap_err();
        assert_eq!(e.line, 6);
    }

    #[test]
    fn polynomial_coefficients_round_trip() {
        let text = "[ring]\npolynomials 2\n[basis]\nu 0 0\nv 1 0\n[ops]\n1 ; E=0/1,mu=0 ; v -> (1/2*a1^1 + -1/3*a2^1)*u\n";
        let parsed = parse(text).unwrap();
        let a = parsed.to_structure().unwrap();
        let text2 = serialize_structure(&a);
        let parsed2 = parse(&text2).unwrap();
        assert_eq!(parsed2.to_structure().unwrap(), a);
    }
}
