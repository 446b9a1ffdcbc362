//! Classical SDPA sparse format (`.dat-s`) writer and parser.
//!
//! Layout: `m`, `nblocks`, block sizes (negative for diagonal blocks), the
//! right-hand sides `c₁ … c_m`, then one `matno blkno i j value` line per
//! upper-triangle entry (`matno = 0` is the constant matrix `F₀`).
//!
//! An [`SdpProblem`] `{A_k • Y = b_k, Y ⪰ 0}` maps onto SDPA's dual form with
//! `F_k = A_k`, `c_k = b_k` and `F₀ = 0`. Free scalars are split as
//! `x = x⁺ − x⁻` in an extra diagonal block appended after all others.

use std::fmt::Write as _;
use std::path::Path;

use super::{BlockKind, SdpProblem, VarSlot};
use crate::error::{Error, Result};
use crate::polyalg::{LinearEquation, VarId};

/// Raw SDPA data exactly as stored in a file (indices 1-based).
#[derive(Clone, Debug, PartialEq)]
pub struct SdpaData {
    pub m: usize,
    /// Positive for PSD blocks, negative for diagonal blocks.
    pub block_sizes: Vec<i64>,
    pub rhs: Vec<f64>,
    /// `(matno, blkno, i, j)` with `i ≤ j`, and the value.
    pub entries: Vec<(usize, usize, usize, usize, f64)>,
}

impl SdpaData {
    /// Converts a problem; the free-variable block (if any) is appended last.
    pub fn from_problem(problem: &SdpProblem) -> Self {
        let mut block_sizes: Vec<i64> = problem
            .blocks()
            .iter()
            .map(|b| match b.kind {
                BlockKind::Psd => b.size as i64,
                BlockKind::Diagonal => -(b.size as i64),
            })
            .collect();
        // Free variables get consecutive positions in the split block.
        let mut free_pos = vec![usize::MAX; problem.num_vars()];
        let mut nfree = 0;
        for v in 0..problem.num_vars() {
            if problem.slot(VarId(v as u32)) == VarSlot::Free {
                free_pos[v] = nfree;
                nfree += 1;
            }
        }
        let free_block = block_sizes.len() + 1;
        if nfree > 0 {
            block_sizes.push(-2 * nfree as i64);
        }
        let mut entries = Vec::new();
        for (k, eq) in problem.equalities().iter().enumerate() {
            let mut row = Vec::with_capacity(eq.terms.len() + 1);
            for &(id, c) in &eq.terms {
                match problem.slot(id) {
                    VarSlot::Entry { block, i, j } => {
                        let v = if i == j { c } else { 0.5 * c };
                        row.push((k + 1, block + 1, i + 1, j + 1, v));
                    }
                    VarSlot::Free => {
                        let p = free_pos[id.index()];
                        row.push((k + 1, free_block, 2 * p + 1, 2 * p + 1, c));
                        row.push((k + 1, free_block, 2 * p + 2, 2 * p + 2, -c));
                    }
                }
            }
            row.sort_by_key(|e| (e.1, e.2, e.3));
            entries.extend(row);
        }
        SdpaData {
            m: problem.equalities().len(),
            block_sizes,
            rhs: problem.equalities().iter().map(|e| e.rhs).collect(),
            entries,
        }
    }

    /// Rebuilds a feasibility problem; the objective matrix `F₀` is ignored.
    /// A trailing diagonal block whose columns come in exactly negated
    /// pairs `(2p+1, 2p+2)` is read back as free variables `x = x⁺ − x⁻`,
    /// undoing the export convention.
    pub fn to_problem(&self) -> Result<SdpProblem> {
        let split = self.split_free_block();
        let mut p = SdpProblem::new();
        let mut handles = Vec::with_capacity(self.block_sizes.len());
        for (b, &s) in self.block_sizes.iter().enumerate() {
            if Some(b + 1) == split {
                handles.push(None);
                continue;
            }
            let h = if s > 0 {
                p.add_psd_block(s as usize)?
            } else {
                p.add_diagonal_block(s.unsigned_abs() as usize)?
            };
            handles.push(Some(h));
        }
        let free: Vec<VarId> = match split {
            Some(b) => (0..self.block_sizes[b - 1].unsigned_abs() / 2)
                .map(|_| p.new_free_var())
                .collect(),
            None => Vec::new(),
        };
        let mut rows: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); self.m];
        for &(mat, blk, i, j, v) in &self.entries {
            if mat == 0 {
                continue;
            }
            match handles[blk - 1] {
                Some(h) => {
                    let c = if i == j { v } else { 2.0 * v };
                    rows[mat - 1].push((p.entry(h, i - 1, j - 1), c));
                }
                // Only the x⁺ column is kept; x⁻ carries the negated copy.
                None if i % 2 == 1 => rows[mat - 1].push((free[(i - 1) / 2], v)),
                None => {}
            }
        }
        for (k, terms) in rows.into_iter().enumerate() {
            let eq = crate::polyalg::AffineScalar::from_terms(0.0, terms);
            p.add_equality(LinearEquation {
                terms: eq.terms().to_vec(),
                rhs: self.rhs[k],
            });
        }
        Ok(p)
    }

    /// The 1-based index of a trailing split-free-variable block, if any.
    fn split_free_block(&self) -> Option<usize> {
        let b = self.block_sizes.len();
        let size = *self.block_sizes.last()?;
        if size >= 0 || size % 2 != 0 {
            return None;
        }
        let mut plus = std::collections::BTreeMap::new();
        let mut minus = std::collections::BTreeMap::new();
        for &(mat, blk, i, j, v) in &self.entries {
            if blk != b {
                continue;
            }
            if mat == 0 || i != j {
                return None;
            }
            let target = if i % 2 == 1 { &mut plus } else { &mut minus };
            target.insert((mat, (i - 1) / 2), v);
        }
        let paired =
            plus.len() == minus.len() && plus.iter().all(|(k, v)| minus.get(k) == Some(&-v));
        paired.then_some(b)
    }

    /// Serialises to the exact text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{}", self.m);
        let _ = writeln!(s, "{}", self.block_sizes.len());
        let sizes: Vec<String> = self.block_sizes.iter().map(|b| b.to_string()).collect();
        let _ = writeln!(s, "{}", sizes.join(" "));
        let rhs: Vec<String> = self.rhs.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(s, "{}", rhs.join(" "));
        for &(mat, blk, i, j, v) in &self.entries {
            let _ = writeln!(s, "{mat} {blk} {i} {j} {v:?}");
        }
        s
    }

    /// Parses SDPA sparse text. Leading comment lines (`"` or `*`) and the
    /// punctuation `, ( ) { }` are tolerated, as in the reference readers.
    pub fn parse<'a>(text: &'a str) -> Result<Self> {
        let mut tokens: Vec<(usize, &'a str)> = Vec::new();
        let mut header = true;
        for (ln, line) in text.lines().enumerate() {
            let t = line.trim_start();
            if header && (t.starts_with('"') || t.starts_with('*')) {
                continue;
            }
            header = false;
            for tok in line.split(|c: char| c.is_whitespace() || ",(){}".contains(c)) {
                if !tok.is_empty() {
                    tokens.push((ln + 1, tok));
                }
            }
        }
        let total_lines = text.lines().count();
        let mut cursor = tokens.into_iter().peekable();
        let next = |cursor: &mut std::iter::Peekable<std::vec::IntoIter<(usize, &'a str)>>,
                    what: &str|
         -> Result<(usize, &'a str)> {
            cursor.next().ok_or(Error::SdpaFormat {
                line: total_lines,
                msg: format!("unexpected end of file while reading {what}"),
            })
        };
        fn num<T: std::str::FromStr>(t: (usize, &str), what: &str) -> Result<T> {
            t.1.parse::<T>().map_err(|_| Error::SdpaFormat {
                line: t.0,
                msg: format!("invalid {what} '{}'", t.1),
            })
        }
        let m: usize = num(next(&mut cursor, "m")?, "constraint count")?;
        let nb: usize = num(next(&mut cursor, "nblocks")?, "block count")?;
        let mut block_sizes = Vec::with_capacity(nb);
        for _ in 0..nb {
            let t = next(&mut cursor, "block sizes")?;
            let s: i64 = num(t, "block size")?;
            if s == 0 {
                return Err(Error::SdpaFormat {
                    line: t.0,
                    msg: "zero block size".into(),
                });
            }
            block_sizes.push(s);
        }
        let mut rhs = Vec::with_capacity(m);
        for _ in 0..m {
            rhs.push(num::<f64>(
                next(&mut cursor, "right-hand side")?,
                "right-hand side",
            )?);
        }
        let mut entries = Vec::new();
        while cursor.peek().is_some() {
            let t0 = next(&mut cursor, "entry")?;
            let mat: usize = num(t0, "matrix number")?;
            let blk: usize = num(next(&mut cursor, "entry")?, "block number")?;
            let i: usize = num(next(&mut cursor, "entry")?, "row index")?;
            let j: usize = num(next(&mut cursor, "entry")?, "column index")?;
            let v: f64 = num(next(&mut cursor, "entry")?, "value")?;
            let bad = |msg: &str| Error::SdpaFormat {
                line: t0.0,
                msg: msg.to_string(),
            };
            if mat > m {
                return Err(bad("matrix number exceeds m"));
            }
            if blk == 0 || blk > nb {
                return Err(bad("block number out of range"));
            }
            let size = block_sizes[blk - 1].unsigned_abs() as usize;
            if i == 0 || j == 0 || i > size || j > size {
                return Err(bad("entry index out of range"));
            }
            if block_sizes[blk - 1] < 0 && i != j {
                return Err(bad("off-diagonal entry in a diagonal block"));
            }
            let (i, j) = if i <= j { (i, j) } else { (j, i) };
            entries.push((mat, blk, i, j, v));
        }
        Ok(SdpaData {
            m,
            block_sizes,
            rhs,
            entries,
        })
    }
}

/// Writes `problem` to `path` in SDPA sparse format.
pub fn to_sdpa_sparse(problem: &SdpProblem, path: &Path) -> Result<()> {
    std::fs::write(path, SdpaData::from_problem(problem).to_text())?;
    Ok(())
}

/// Reads an SDPA sparse file.
pub fn read_sdpa_sparse(path: &Path) -> Result<SdpaData> {
    SdpaData::parse(&std::fs::read_to_string(path)?)
}
