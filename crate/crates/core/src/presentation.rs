//! Finite presentations and words over their generators.
//!
//! Words are stored as signed 1-based generator indices: `+k` is the k-th
//! generator, `-k` its inverse. The text format puts everything on `gens:`
//! and `rels:` lines. When every generator name is a single lowercase
//! letter, a word is a compact letter string with uppercase meaning
//! inverse (`xxYYY`). With longer names, letters are joined by `.` and
//! inverses take a `^-1` suffix (`t2.x.t3^-1`). Blank lines and `#`
//! comments are ignored.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// A word over the generators of some presentation.
///
/// Letters are nonzero signed indices. The zero value never appears.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word(pub Vec<i32>);

impl Word {
    pub fn new(letters: Vec<i32>) -> Word {
        debug_assert!(letters.iter().all(|&l| l != 0));
        Word(letters)
    }

    pub fn empty() -> Word {
        Word(Vec::new())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[i32] {
        &self.0
    }

    /// Cancel adjacent inverse pairs until none remain.
    pub fn free_reduce(&self) -> Word {
        let mut out: Vec<i32> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|&l| -l).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }

    /// Net exponent of generator `gen` (1-based).
    pub fn exponent_sum(&self, gen: usize) -> i64 {
        let g = gen as i32;
        self.0
            .iter()
            .map(|&l| {
                if l == g {
                    1
                } else if l == -g {
                    -1
                } else {
                    0
                }
            })
            .sum()
    }
}

/// Where a generator of a triangularized presentation came from.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum GenOrigin {
    /// Same index as in the input presentation.
    Original(usize),
    /// Introduced while subdividing the relator at this index.
    Subdivision { relator: usize },
    /// The shared padding generator, trivial in the group.
    Padding,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FinitePresentation {
    pub generator_names: Vec<String>,
    pub relators: Vec<Word>,
}

impl FinitePresentation {
    /// Build a presentation, rejecting duplicate or malformed generator
    /// names, out-of-range letters, and relators that freely reduce to the
    /// empty word.
    pub fn new(generator_names: Vec<String>, relators: Vec<Word>) -> Result<FinitePresentation> {
        if generator_names.is_empty() {
            return Err(Error::InvalidInput("presentation needs at least one generator".into()));
        }
        for (i, name) in generator_names.iter().enumerate() {
            validate_generator_name(name)?;
            if generator_names[..i].contains(name) {
                return Err(Error::InvalidInput(format!("duplicate generator name '{name}'")));
            }
        }
        let n = generator_names.len() as i32;
        for w in &relators {
            if w.0.iter().any(|&l| l == 0 || l.abs() > n) {
                return Err(Error::InvalidInput("relator letter out of range".into()));
            }
            if w.free_reduce().is_empty() {
                return Err(Error::InvalidInput(
                    "relator freely reduces to the empty word".into(),
                ));
            }
        }
        Ok(FinitePresentation { generator_names, relators })
    }

    pub fn n_generators(&self) -> usize {
        self.generator_names.len()
    }

    /// True when every relator has stored length exactly three.
    ///
    /// Stored length, not reduced length: the padding relator `g g g^-1`
    /// counts as a triangle even though it reduces to a single letter.
    pub fn is_triangular(&self) -> bool {
        self.relators.iter().all(|r| r.len() == 3)
    }

    /// Parse a word in this presentation's alphabet.
    pub fn parse_word(&self, text: &str) -> Result<Word> {
        parse_word_at(text, &self.generator_names, 0, 0)
    }

    /// Render a word in the same dialect `to_text` uses.
    pub fn word_to_text(&self, w: &Word) -> String {
        let compact = self.generator_names.iter().all(|n| is_single_lower(n));
        if compact {
            w.0.iter()
                .map(|&l| {
                    let name = &self.generator_names[(l.abs() - 1) as usize];
                    if l > 0 {
                        name.clone()
                    } else {
                        name.to_uppercase()
                    }
                })
                .collect()
        } else {
            w.0.iter()
                .map(|&l| {
                    let name = &self.generator_names[(l.abs() - 1) as usize];
                    if l > 0 {
                        name.clone()
                    } else {
                        format!("{name}^-1")
                    }
                })
                .collect::<Vec<_>>()
                .join(".")
        }
    }

    /// Serialize to the `gens:`/`rels:` text format. Round-trips through
    /// `parse_presentation` up to free reduction of relators.
    pub fn to_text(&self) -> String {
        let mut s = format!("gens: {}\n", self.generator_names.join(" "));
        if !self.relators.is_empty() {
            let words: Vec<String> = self.relators.iter().map(|r| self.word_to_text(r)).collect();
            s.push_str(&format!("rels: {}\n", words.join(" ")));
        }
        s
    }

    /// Rewrite every relator into words of length exactly three.
    ///
    /// A relator `l1 l2 ... lk` with `k >= 4` is subdivided left to right
    /// with fresh generators `t` standing for the growing prefix:
    /// `l1 l2 t2^-1`, `t2 l3 t3^-1`, ..., `t_{k-2} l_{k-1} lk`. Relators of
    /// length one or two are padded with a shared generator `g` made
    /// trivial by the extra triangle `g g g^-1`. Length-three relators and
    /// presentations with no relators pass through unchanged. Original
    /// generators keep their indices, so words over the input alphabet
    /// stay valid.
    pub fn triangularize(&self) -> Result<Triangularized> {
        let mut names = self.generator_names.clone();
        let mut origins: Vec<GenOrigin> =
            (0..names.len()).map(GenOrigin::Original).collect();
        let mut relators: Vec<Word> = Vec::new();
        let mut needs_padding = false;

        let fresh = |names: &mut Vec<String>, prefix: &str, counter: &mut usize| -> usize {
            loop {
                *counter += 1;
                let candidate = format!("{prefix}{counter}");
                if !names.contains(&candidate) {
                    names.push(candidate);
                    return names.len();
                }
            }
        };
        let mut t_counter = 0usize;

        for (ri, r) in self.relators.iter().enumerate() {
            let w = r.free_reduce();
            match w.len() {
                0 => {
                    return Err(Error::InvalidInput("trivial relator".into()));
                }
                1 | 2 => {
                    needs_padding = true;
                    relators.push(w);
                }
                3 => relators.push(w),
                k => {
                    let ls = w.letters();
                    let mut prev_t: i32 = 0;
                    for piece in 0..(k - 2) {
                        if piece == 0 {
                            let t = fresh(&mut names, "t", &mut t_counter) as i32;
                            origins.push(GenOrigin::Subdivision { relator: ri });
                            relators.push(Word::new(vec![ls[0], ls[1], -t]));
                            prev_t = t;
                        } else if piece == k - 3 {
                            relators.push(Word::new(vec![prev_t, ls[k - 2], ls[k - 1]]));
                        } else {
                            let t = fresh(&mut names, "t", &mut t_counter) as i32;
                            origins.push(GenOrigin::Subdivision { relator: ri });
                            relators.push(Word::new(vec![prev_t, ls[piece + 1], -t]));
                            prev_t = t;
                        }
                    }
                }
            }
        }

        if needs_padding {
            let mut g_counter = 0usize;
            let g = {
                // Prefer the bare name "g" when it is free.
                if !names.contains(&"g".to_string()) {
                    names.push("g".into());
                    names.len()
                } else {
                    fresh(&mut names, "g", &mut g_counter)
                }
            } as i32;
            origins.push(GenOrigin::Padding);
            for r in relators.iter_mut() {
                match r.len() {
                    1 => r.0.extend([g, g]),
                    2 => r.0.push(g),
                    _ => {}
                }
            }
            relators.push(Word::new(vec![g, g, -g]));
        }

        let presentation = FinitePresentation { generator_names: names, relators };
        debug_assert!(presentation.is_triangular());
        Ok(Triangularized { presentation, gen_origins: origins })
    }
}

/// Result of `triangularize`: the new presentation plus, for each of its
/// generators, where that generator came from.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Triangularized {
    pub presentation: FinitePresentation,
    pub gen_origins: Vec<GenOrigin>,
}

fn is_single_lower(name: &str) -> bool {
    name.len() == 1 && name.chars().next().unwrap().is_ascii_lowercase()
}

fn validate_generator_name(name: &str) -> Result<()> {
    let mut chars = name.chars();
    let ok = match chars.next() {
        Some(c) if c.is_ascii_lowercase() => chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit()),
        _ => false,
    };
    if ok {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "generator name '{name}' must be a lowercase letter followed by lowercase letters or digits"
        )))
    }
}

fn parse_word_at(token: &str, names: &[String], line: usize, col: usize) -> Result<Word> {
    let mut letters = Vec::new();
    if token.contains('.') || token.contains('^') || names.iter().any(|n| n == token) {
        // Dotted form, or a token that is exactly one generator name.
        for piece in token.split('.') {
            let (name, sign) = match piece.strip_suffix("^-1") {
                Some(base) => (base, -1),
                None => (piece, 1),
            };
            match names.iter().position(|n| n == name) {
                Some(i) => letters.push(sign * (i as i32 + 1)),
                None => {
                    return Err(Error::UnknownGenerator { name: name.to_string(), line, col })
                }
            }
        }
    } else {
        // Compact single-letter form.
        for (ci, c) in token.chars().enumerate() {
            let lower = c.to_ascii_lowercase().to_string();
            match names.iter().position(|n| *n == lower) {
                Some(i) if c.is_ascii_lowercase() => letters.push(i as i32 + 1),
                Some(i) if c.is_ascii_uppercase() => letters.push(-(i as i32 + 1)),
                _ => {
                    return Err(Error::UnknownGenerator {
                        name: c.to_string(),
                        line,
                        col: col + ci,
                    })
                }
            }
        }
    }
    if letters.is_empty() {
        return Err(Error::Parse { line, col, msg: "empty word".into() });
    }
    Ok(Word(letters))
}

/// Parse the `gens:`/`rels:` format. Relators are freely reduced; a
/// relator that reduces to the empty word is rejected.
pub fn parse_presentation(text: &str) -> Result<FinitePresentation> {
    let mut names: Option<(Vec<String>, usize)> = None;
    let mut relators: Vec<Word> = Vec::new();

    for (li, raw) in text.lines().enumerate() {
        let line_no = li + 1;
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        if let Some(rest) = line.trim_start().strip_prefix("gens:") {
            if names.is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    col: 1,
                    msg: "duplicate gens: line".into(),
                });
            }
            let gens: Vec<String> = rest.split_whitespace().map(|s| s.to_string()).collect();
            if gens.is_empty() {
                return Err(Error::Parse { line: line_no, col: 1, msg: "no generators listed".into() });
            }
            names = Some((gens, line_no));
        } else if let Some(rest) = line.trim_start().strip_prefix("rels:") {
            let (ref gens, _) = names.as_ref().ok_or(Error::Parse {
                line: line_no,
                col: 1,
                msg: "rels: before gens:".into(),
            })?;
            for tok in rest.split_whitespace() {
                let col = raw.find(tok).map(|i| i + 1).unwrap_or(1);
                let w = parse_word_at(tok, gens, line_no, col)?;
                let reduced = w.free_reduce();
                if reduced.is_empty() {
                    return Err(Error::Parse {
                        line: line_no,
                        col,
                        msg: format!("relator '{tok}' freely reduces to the empty word"),
                    });
                }
                relators.push(reduced);
            }
        } else {
            let col = raw.len() - raw.trim_start().len() + 1;
            return Err(Error::Parse {
                line: line_no,
                col,
                msg: "expected 'gens:' or 'rels:' line".into(),
            });
        }
    }

    let (gens, _) = names.ok_or(Error::Parse { line: 1, col: 1, msg: "missing gens: line".into() })?;
    FinitePresentation::new(gens, relators)
}

/// Parse a subgroup generator file: whitespace-separated words over the
/// presentation's alphabet, with blank lines and `#` comments allowed.
/// An empty list is valid and denotes the trivial subgroup.
pub fn parse_subgroup_words(text: &str, p: &FinitePresentation) -> Result<Vec<Word>> {
    let mut words = Vec::new();
    for (li, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        for tok in line.split_whitespace() {
            let col = raw.find(tok).map(|i| i + 1).unwrap_or(1);
            words.push(parse_word_at(tok, &p.generator_names, li + 1, col)?);
        }
    }
    Ok(words)
}
