//! Central processing: Level-2 combining of per-AP symbol estimates,
//! per-pilot polar decoding, the output list, and the SIC iteration loop.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::ap::{ApState, Reconstruction};
use crate::codebook::index_to_bits;
use crate::config::{Message, TrialResult};
use crate::error::{Error, Result};
use crate::modem::qpsk_llr;
use crate::polar::scl_decode;
use crate::tx::Transmitter;

/// Per pilot index, the mean of the matching `Ĉ` columns over the APs that
/// detected it. Pilots detected nowhere are absent.
pub fn combine_symbols(
    per_ap: &[(&[usize], &DMatrix<Complex64>)],
) -> Result<BTreeMap<usize, Vec<Complex64>>> {
    let mut sums: BTreeMap<usize, (Vec<Complex64>, usize)> = BTreeMap::new();
    for (detected, c_hat) in per_ap {
        if c_hat.ncols() != detected.len() {
            return Err(Error::contract(format!(
                "{} symbol columns for {} detected pilots",
                c_hat.ncols(),
                detected.len()
            )));
        }
        for (u, &p) in detected.iter().enumerate() {
            let col = c_hat.column(u);
            let entry = sums
                .entry(p)
                .or_insert_with(|| (vec![Complex64::new(0.0, 0.0); col.len()], 0));
            if entry.0.len() != col.len() {
                return Err(Error::contract("symbol columns of unequal length"));
            }
            for (acc, &v) in entry.0.iter_mut().zip(col.iter()) {
                *acc += v;
            }
            entry.1 += 1;
        }
    }
    Ok(sums
        .into_iter()
        .map(|(p, (sum, count))| {
            let inv = 1.0 / count as f64;
            (p, sum.into_iter().map(|z| z * inv).collect())
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodedEntry {
    pub pilot_index: usize,
    pub payload: Vec<u8>,
    /// 1-based decoding iteration.
    pub iteration: usize,
}

/// Messages decoded so far. A pilot index is decoded at most once.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DecodedSet {
    entries: Vec<DecodedEntry>,
    pilots: BTreeSet<usize>,
}

impl DecodedSet {
    pub fn entries(&self) -> &[DecodedEntry] {
        &self.entries
    }

    pub fn contains_pilot(&self, p: usize) -> bool {
        self.pilots.contains(&p)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Returns false (and changes nothing) if the pilot is already decoded.
    pub fn insert(&mut self, entry: DecodedEntry) -> bool {
        if !self.pilots.insert(entry.pilot_index) {
            return false;
        }
        self.entries.push(entry);
        true
    }

    /// Full `B`-bit messages: pilot selector bits followed by the payload.
    pub fn output_list(&self, pilot_bits: usize) -> BTreeSet<Vec<u8>> {
        self.entries
            .iter()
            .map(|e| {
                let mut m = index_to_bits(e.pilot_index, pilot_bits);
                m.extend_from_slice(&e.payload);
                m
            })
            .collect()
    }

    /// Exclusion mask over `n` pilots.
    pub fn mask(&self, n: usize) -> Vec<bool> {
        let mut m = vec![false; n];
        for &p in &self.pilots {
            if p < n {
                m[p] = true;
            }
        }
        m
    }
}

/// Shared receiver parameters.
#[derive(Debug)]
pub struct Receiver<'a> {
    /// Re-encoder for SIC; also carries the code and codebooks.
    pub tx: Transmitter<'a>,
    pub users_per_ap: usize,
    pub list_size: usize,
    pub noise_power: f64,
    pub max_iterations: usize,
}

/// Decodes every combined pilot not yet in `already`. Pilots are visited in
/// increasing order; returns `(pilot, payload)` for CRC-valid decodes.
pub fn decode_round(
    combined: &BTreeMap<usize, Vec<Complex64>>,
    rx: &Receiver<'_>,
    already: &DecodedSet,
) -> Vec<(usize, Vec<u8>)> {
    let todo: Vec<(&usize, &Vec<Complex64>)> = combined
        .iter()
        .filter(|(p, _)| !already.contains_pilot(**p))
        .collect();
    todo.par_iter()
        .filter_map(|(&p, symbols)| {
            let llr = qpsk_llr(symbols, 1.0);
            scl_decode(&llr, rx.tx.polar, rx.tx.crc, rx.list_size).map(|payload| (p, payload))
        })
        .collect()
}

/// Ground-truth symbols injected in place of the combined estimates.
#[derive(Clone, Debug, Default)]
pub struct Genie {
    pub symbols: BTreeMap<usize, Vec<Complex64>>,
}

/// How per-AP estimates reach a decoder.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Cooperation {
    /// Level 2: the CPU averages symbol estimates across APs.
    Level2,
    /// Every AP decodes and cancels on its own; outputs are merged.
    None,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LoopOutcome {
    pub decoded: DecodedSet,
    pub iterations_used: usize,
    /// `(iteration, new decodes, cumulative output size)`.
    pub trace: Vec<(usize, usize, usize)>,
}

/// The detection / combining / decoding / SIC loop over all APs.
pub fn decode_iterations(
    aps: &mut [ApState],
    rx: &Receiver<'_>,
    genie: Option<&Genie>,
) -> Result<LoopOutcome> {
    let pilots = rx.tx.pilots;
    let n_p = pilots.pilot_len();
    let data_power = rx.tx.data_power;
    let mut out = LoopOutcome::default();
    for iteration in 1..=rx.max_iterations {
        out.iterations_used = iteration;
        let mask = out.decoded.mask(pilots.num_pilots());
        aps.par_iter_mut().try_for_each(|ap| -> Result<()> {
            ap.detect(pilots, rx.users_per_ap, rx.noise_power, Some(&mask))?;
            ap.estimate_symbols(n_p, rx.noise_power, data_power, rx.tx.patterns)
        })?;
        let reports: Vec<(&[usize], &DMatrix<Complex64>)> = aps
            .iter()
            .map(|ap| (ap.detected.as_slice(), &ap.c_hat))
            .collect();
        let mut combined = combine_symbols(&reports)?;
        if let Some(g) = genie {
            for (p, sym) in combined.iter_mut() {
                if let Some(truth) = g.symbols.get(p) {
                    sym.clone_from(truth);
                }
            }
        }
        let fresh = decode_round(&combined, rx, &out.decoded);
        let mut recs = Vec::with_capacity(fresh.len());
        for (pilot_index, payload) in fresh {
            let symbols = rx.tx.codeword_symbols(&payload)?;
            recs.push(Reconstruction {
                pilot_index,
                signal: rx.tx.frame(pilot_index, &symbols.values)?,
            });
            out.decoded.insert(DecodedEntry {
                pilot_index,
                payload,
                iteration,
            });
        }
        out.trace.push((iteration, recs.len(), out.decoded.len()));
        if recs.is_empty() {
            break;
        }
        aps.par_iter_mut()
            .try_for_each(|ap| ap.cancel(&recs, pilots))?;
    }
    Ok(out)
}

/// Counts misdetections and false alarms of an output list.
pub fn score(output: &BTreeSet<Vec<u8>>, truth: &[Message]) -> (usize, usize) {
    let sent: BTreeSet<&Vec<u8>> = truth.iter().map(|m| &m.bits).collect();
    let n_md = truth.iter().filter(|m| !output.contains(&m.bits)).count();
    let n_fa = output.iter().filter(|m| !sent.contains(m)).count();
    (n_md, n_fa)
}

/// Runs the decoding loop under the chosen cooperation level and scores
/// the output list against the transmitted messages.
pub fn run_decoding_loop(
    mut aps: Vec<ApState>,
    rx: &Receiver<'_>,
    cooperation: Cooperation,
    genie: Option<&Genie>,
    truth: &[Message],
) -> Result<TrialResult> {
    let pilot_bits = rx.tx.pilot_bits;
    let (output, iterations_used, per_iteration) = match cooperation {
        Cooperation::Level2 => {
            let o = decode_iterations(&mut aps, rx, genie)?;
            let per: Vec<usize> = o.trace.iter().map(|t| t.1).collect();
            (o.decoded.output_list(pilot_bits), o.iterations_used, per)
        }
        Cooperation::None => {
            let outcomes = aps
                .par_iter_mut()
                .map(|ap| decode_iterations(std::slice::from_mut(ap), rx, genie))
                .collect::<Result<Vec<_>>>()?;
            let mut union = BTreeSet::new();
            let rounds = outcomes.iter().map(|o| o.iterations_used).max().unwrap_or(0);
            let mut per = vec![0; rounds];
            for (j, slot) in per.iter_mut().enumerate() {
                for o in &outcomes {
                    for e in o.decoded.entries().iter().filter(|e| e.iteration == j + 1) {
                        let mut m = index_to_bits(e.pilot_index, pilot_bits);
                        m.extend_from_slice(&e.payload);
                        *slot += union.insert(m) as usize;
                    }
                }
            }
            (union, rounds, per)
        }
    };
    let (n_md, n_fa) = score(&output, truth);
    Ok(TrialResult {
        decoded: output.into_iter().collect(),
        active_users: truth.len(),
        n_md,
        n_fa,
        iterations_used,
        per_iteration_decoded: per_iteration,
    })
}
