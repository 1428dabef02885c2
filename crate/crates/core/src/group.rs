//! Finitely generated groups with easy normal forms and their Cayley graphs.
//!
//! Three families are supported: free groups `free:<d>`, free abelian groups
//! `abelian:<d>` and free products of cyclic groups `zprod:<n1>,<n2>,...`.
//! Elements are kept in a canonical form so they can be hashed and compared
//! directly, which is what the trace construction relies on.

use std::collections::{HashSet, VecDeque};
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const MAX_LETTERS: usize = 26;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    Free { rank: usize },
    Abelian { rank: usize },
    FreeProduct { orders: Vec<u32> },
}

/// One element of the symmetric generating set: `step` is +1 or -1 applied
/// to coordinate (or free factor) `factor`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Generator {
    pub factor: usize,
    pub step: i32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GroupSpec {
    family: Family,
    generators: Vec<Generator>,
    inverse: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Repr {
    /// Geodesic word of generator indices (free groups and free products).
    Word(Vec<u8>),
    /// Exponent vector (free abelian groups).
    Exponents(Vec<i32>),
}

/// A group element in normal form. Only meaningful together with the
/// [`GroupSpec`] that produced it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement(Repr);

impl GroupSpec {
    pub fn parse(text: &str) -> Result<Self> {
        const FIELD: &str = "group";
        let text = text.trim();
        let (kind, rest) = text
            .split_once(':')
            .ok_or_else(|| Error::syntax(FIELD, text.len(), "expected `<family>:<params>`"))?;
        let offset = kind.len() + 1;
        let parse_int = |s: &str, pos: usize| -> Result<u32> {
            s.trim()
                .parse::<u32>()
                .map_err(|_| Error::syntax(FIELD, pos, format!("expected an integer, found `{s}`")))
        };
        let family = match kind {
            "free" | "abelian" => {
                let rank = parse_int(rest, offset)? as usize;
                if rank < 1 {
                    return Err(Error::validation(FIELD, "rank must be at least 1"));
                }
                if rank > MAX_LETTERS {
                    return Err(Error::validation(FIELD, format!("rank must be at most {MAX_LETTERS}")));
                }
                if kind == "free" {
                    Family::Free { rank }
                } else {
                    Family::Abelian { rank }
                }
            }
            "zprod" => {
                let mut orders = Vec::new();
                let mut pos = offset;
                for part in rest.split(',') {
                    let n = parse_int(part, pos)?;
                    if n < 2 {
                        return Err(Error::validation(
                            FIELD,
                            format!("cyclic factor order must be at least 2, found {n}"),
                        ));
                    }
                    orders.push(n);
                    pos += part.len() + 1;
                }
                if orders.len() < 2 {
                    return Err(Error::validation(FIELD, "a free product needs at least 2 factors"));
                }
                if orders.len() > MAX_LETTERS {
                    return Err(Error::validation(FIELD, format!("at most {MAX_LETTERS} factors")));
                }
                Family::FreeProduct { orders }
            }
            other => {
                return Err(Error::syntax(
                    FIELD,
                    0,
                    format!("unknown family `{other}` (expected free, abelian or zprod)"),
                ))
            }
        };
        Ok(Self::from_family(family))
    }

    pub fn from_family(family: Family) -> Self {
        let mut generators = Vec::new();
        match &family {
            Family::Free { rank } | Family::Abelian { rank } => {
                for factor in 0..*rank {
                    generators.push(Generator { factor, step: 1 });
                    generators.push(Generator { factor, step: -1 });
                }
            }
            Family::FreeProduct { orders } => {
                for (factor, &n) in orders.iter().enumerate() {
                    generators.push(Generator { factor, step: 1 });
                    if n > 2 {
                        generators.push(Generator { factor, step: -1 });
                    }
                }
            }
        }
        let inverse = generators
            .iter()
            .map(|g| {
                let involution = matches!(&family, Family::FreeProduct { orders } if orders[g.factor] == 2);
                let want = if involution { g.step } else { -g.step };
                generators
                    .iter()
                    .position(|h| h.factor == g.factor && h.step == want)
                    .expect("generator list is symmetric")
            })
            .collect();
        GroupSpec {
            family,
            generators,
            inverse,
        }
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn generators(&self) -> &[Generator] {
        &self.generators
    }

    /// Vertex degree of the Cayley graph.
    pub fn degree(&self) -> usize {
        self.generators.len()
    }

    pub fn inverse_generator(&self, s: usize) -> usize {
        self.inverse[s]
    }

    /// True when the Cayley graph is a regular tree, in which case the word
    /// length of a simple random walk is itself a Markov chain.
    pub fn is_regular_tree(&self) -> bool {
        match &self.family {
            Family::Free { .. } => true,
            Family::FreeProduct { orders } => orders.iter().all(|&n| n == 2),
            Family::Abelian { .. } => false,
        }
    }

    pub fn presentation(&self) -> String {
        match &self.family {
            Family::Free { rank } => format!("free:{rank}"),
            Family::Abelian { rank } => format!("abelian:{rank}"),
            Family::FreeProduct { orders } => {
                let parts: Vec<String> = orders.iter().map(|n| n.to_string()).collect();
                format!("zprod:{}", parts.join(","))
            }
        }
    }

    pub fn identity(&self) -> GroupElement {
        match &self.family {
            Family::Abelian { rank } => GroupElement(Repr::Exponents(vec![0; *rank])),
            _ => GroupElement(Repr::Word(Vec::new())),
        }
    }

    pub fn generator_element(&self, s: usize) -> GroupElement {
        self.mul_generator(&self.identity(), s)
    }

    /// Right multiplication by generator `s`, the hot path of every walk.
    pub fn mul_generator(&self, x: &GroupElement, s: usize) -> GroupElement {
        let mut out = x.clone();
        self.mul_generator_in_place(&mut out, s);
        out
    }

    pub fn mul_generator_in_place(&self, x: &mut GroupElement, s: usize) {
        let g = self.generators[s];
        match (&self.family, &mut x.0) {
            (Family::Abelian { .. }, Repr::Exponents(e)) => e[g.factor] += g.step,
            (Family::Free { .. }, Repr::Word(w)) => {
                if w.last().map(|&l| l as usize) == Some(self.inverse[s]) {
                    w.pop();
                } else {
                    w.push(s as u8);
                }
            }
            (Family::FreeProduct { orders }, Repr::Word(w)) => {
                let n = orders[g.factor] as i64;
                let trailing = w
                    .iter()
                    .rev()
                    .take_while(|&&l| self.generators[l as usize].factor == g.factor)
                    .count();
                let power = if trailing == 0 {
                    0
                } else {
                    let step = self.generators[w[w.len() - 1] as usize].step as i64;
                    step * trailing as i64
                };
                let updated = (power + g.step as i64).rem_euclid(n);
                w.truncate(w.len() - trailing);
                self.push_syllable(w, g.factor, updated, n);
            }
            _ => unreachable!("element does not belong to this group"),
        }
    }

    fn push_syllable(&self, w: &mut Vec<u8>, factor: usize, power: i64, order: i64) {
        if power == 0 {
            return;
        }
        let (count, step) = if 2 * power <= order {
            (power, 1)
        } else {
            (order - power, -1)
        };
        let letter = self
            .generators
            .iter()
            .position(|h| h.factor == factor && h.step == step)
            .expect("syllable generator exists") as u8;
        w.extend(std::iter::repeat_n(letter, count as usize));
    }

    pub fn multiply(&self, a: &GroupElement, b: &GroupElement) -> GroupElement {
        match (&a.0, &b.0) {
            (Repr::Exponents(x), Repr::Exponents(y)) => {
                GroupElement(Repr::Exponents(x.iter().zip(y).map(|(p, q)| p + q).collect()))
            }
            (Repr::Word(_), Repr::Word(w)) => {
                let mut out = a.clone();
                for &l in w {
                    self.mul_generator_in_place(&mut out, l as usize);
                }
                out
            }
            _ => unreachable!("mixed element representations"),
        }
    }

    pub fn inverse(&self, x: &GroupElement) -> GroupElement {
        match &x.0 {
            Repr::Exponents(e) => GroupElement(Repr::Exponents(e.iter().map(|v| -v).collect())),
            Repr::Word(w) => {
                let mut out = self.identity();
                for &l in w.iter().rev() {
                    self.mul_generator_in_place(&mut out, self.inverse[l as usize]);
                }
                out
            }
        }
    }

    /// Cayley-graph distance from the identity.
    pub fn word_length(&self, x: &GroupElement) -> usize {
        match &x.0 {
            Repr::Word(w) => w.len(),
            Repr::Exponents(e) => e.iter().map(|v| v.unsigned_abs() as usize).sum(),
        }
    }

    /// Canonical spelling of `x` as generator indices.
    pub fn word(&self, x: &GroupElement) -> Vec<usize> {
        match &x.0 {
            Repr::Word(w) => w.iter().map(|&l| l as usize).collect(),
            Repr::Exponents(e) => {
                let mut out = Vec::new();
                for (factor, &v) in e.iter().enumerate() {
                    let step = if v >= 0 { 1 } else { -1 };
                    let s = self
                        .generators
                        .iter()
                        .position(|h| h.factor == factor && h.step == step)
                        .unwrap();
                    out.extend(std::iter::repeat_n(s, v.unsigned_abs() as usize));
                }
                out
            }
        }
    }

    /// Distinct neighbours `x·s` in generator order.
    pub fn neighbors(&self, x: &GroupElement) -> Vec<GroupElement> {
        let mut seen = HashSet::new();
        (0..self.degree())
            .map(|s| self.mul_generator(x, s))
            .filter(|y| seen.insert(y.clone()))
            .collect()
    }

    /// Uniform generator index, i.e. one step of the simple random walk.
    pub fn sample_generator<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.degree())
    }

    pub fn srw_step<R: Rng + ?Sized>(&self, x: &GroupElement, rng: &mut R) -> GroupElement {
        let s = self.sample_generator(rng);
        self.mul_generator(x, s)
    }

    pub fn generator_name(&self, s: usize) -> char {
        let g = self.generators[s];
        let c = (b'a' + g.factor as u8) as char;
        if g.step < 0 {
            c.to_ascii_uppercase()
        } else {
            c
        }
    }

    /// Dotted letter encoding, e.g. `a.B.a`; the identity is `1`.
    pub fn encode(&self, x: &GroupElement) -> String {
        let word = self.word(x);
        if word.is_empty() {
            return "1".to_string();
        }
        let letters: Vec<String> = word.iter().map(|&s| self.generator_name(s).to_string()).collect();
        letters.join(".")
    }

    pub fn decode(&self, text: &str) -> Result<GroupElement> {
        let mut x = self.identity();
        let text = text.trim();
        if text == "1" || text.is_empty() {
            return Ok(x);
        }
        let mut pos = 0;
        for part in text.split('.') {
            let mut chars = part.chars();
            let (Some(c), None) = (chars.next(), chars.next()) else {
                return Err(Error::syntax("element", pos, format!("bad letter `{part}`")));
            };
            let s = (0..self.degree())
                .find(|&s| self.generator_name(s) == c)
                .ok_or_else(|| Error::syntax("element", pos, format!("unknown generator `{c}`")))?;
            self.mul_generator_in_place(&mut x, s);
            pos += part.len() + 1;
        }
        Ok(x)
    }

    /// Breadth-first enumeration of the ball of the given radius, identity
    /// first. Fails once more than `budget` elements would be produced.
    pub fn ball(&self, radius: usize, budget: usize) -> Result<Vec<GroupElement>> {
        let id = self.identity();
        let mut seen: HashSet<GroupElement> = HashSet::from([id.clone()]);
        let mut order = vec![id.clone()];
        let mut queue = VecDeque::from([(id, 0usize)]);
        while let Some((x, d)) = queue.pop_front() {
            if d == radius {
                continue;
            }
            for s in 0..self.degree() {
                let y = self.mul_generator(&x, s);
                if seen.insert(y.clone()) {
                    if order.len() >= budget {
                        return Err(Error::Resource {
                            bound: format!("Cayley ball of radius {radius}"),
                            limit: budget as u64,
                        });
                    }
                    order.push(y.clone());
                    queue.push_back((y, d + 1));
                }
            }
        }
        Ok(order)
    }
}

impl fmt::Display for GroupSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.presentation())
    }
}

impl Serialize for GroupSpec {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.presentation())
    }
}

impl<'de> Deserialize<'de> for GroupSpec {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        GroupSpec::parse(&text).map_err(serde::de::Error::custom)
    }
}
