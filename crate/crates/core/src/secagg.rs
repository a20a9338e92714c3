//! One-time-pad secure aggregation over integers modulo 2^64.
//!
//! A trusted third party derives zero-sum mask vectors from pairwise
//! pseudorandom streams; clients add their mask to a two's-complement
//! encoding of their signed payload; the server sums residues and the
//! masks cancel, leaving the exact signed sum (as long as every entry of
//! the true sum fits in an i64).
//!
//! The TTP sees only the roster and the payload length. It never touches
//! plain payloads or group labels.

use rand::RngCore;
use thiserror::Error;

use crate::seeding::{derive_rng, purpose};

#[derive(Debug, Error, PartialEq)]
pub enum SecAggError {
    #[error("roster must have at least 2 participants, got {0}")]
    RosterTooSmall(usize),
    #[error("duplicate roster entry {0}")]
    DuplicateRosterEntry(u64),
    #[error("vector length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("signed value {0} cannot be encoded (|v| must be < 2^63)")]
    EncodeOverflow(i64),
    #[error("missing upload from participant {0}")]
    MissingParticipant(u64),
    #[error("duplicate upload from participant {0}")]
    DuplicateParticipant(u64),
    #[error("upload from {0} is not in the roster")]
    UnknownParticipant(u64),
}

/// Vector of residues modulo 2^64.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldVector {
    entries: Vec<u64>,
}

impl FieldVector {
    pub fn zeros(len: usize) -> Self {
        Self {
            entries: vec![0; len],
        }
    }

    pub fn from_residues(entries: Vec<u64>) -> Self {
        Self { entries }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn residues(&self) -> &[u64] {
        &self.entries
    }

    /// Elementwise sum modulo 2^64.
    pub fn add_assign(&mut self, other: &FieldVector) -> Result<(), SecAggError> {
        if self.len() != other.len() {
            return Err(SecAggError::LengthMismatch(self.len(), other.len()));
        }
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a = a.wrapping_add(*b);
        }
        Ok(())
    }

    /// Elementwise difference modulo 2^64.
    pub fn sub_assign(&mut self, other: &FieldVector) -> Result<(), SecAggError> {
        if self.len() != other.len() {
            return Err(SecAggError::LengthMismatch(self.len(), other.len()));
        }
        for (a, b) in self.entries.iter_mut().zip(&other.entries) {
            *a = a.wrapping_sub(*b);
        }
        Ok(())
    }

    /// Two's-complement decoding back to signed integers.
    pub fn decode_signed(&self) -> Vec<i64> {
        self.entries.iter().map(|&r| r as i64).collect()
    }
}

/// Two's-complement embedding of signed integers into the field.
pub fn encode_signed(values: &[i64]) -> Result<FieldVector, SecAggError> {
    let mut entries = Vec::with_capacity(values.len());
    for &v in values {
        if v == i64::MIN {
            return Err(SecAggError::EncodeOverflow(v));
        }
        entries.push(v as u64);
    }
    Ok(FieldVector { entries })
}

/// Client-side masking: (plain + mask) mod 2^64, elementwise.
pub fn mask_vector(plain: &FieldVector, mask: &FieldVector) -> Result<FieldVector, SecAggError> {
    let mut out = plain.clone();
    out.add_assign(mask)?;
    Ok(out)
}

/// Pairwise mask topology.
///
/// `Complete` derives one stream per user pair, the construction used by
/// pairwise secure aggregation. `Ring` keeps only the streams between
/// roster neighbours (plus the wrap-around edge); masks still sum to zero
/// and each one costs two streams instead of n-1, which keeps large
/// in-process rosters affordable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MaskScheme {
    Complete,
    Ring,
}

/// In-process trusted third party.
pub struct MaskIssuer {
    scheme: MaskScheme,
    master_seed: u64,
    roster: Vec<u64>,
    length: usize,
}

fn pair_stream(master_seed: u64, from: u64, to: u64, length: usize) -> FieldVector {
    let mut rng = derive_rng(master_seed, purpose::PAIR_MASK, from, to);
    let mut entries = vec![0u64; length];
    for e in entries.iter_mut() {
        *e = rng.next_u64();
    }
    FieldVector { entries }
}

impl MaskIssuer {
    pub fn new(
        scheme: MaskScheme,
        master_seed: u64,
        roster: &[u64],
        length: usize,
    ) -> Result<Self, SecAggError> {
        if roster.len() < 2 {
            return Err(SecAggError::RosterTooSmall(roster.len()));
        }
        let mut seen = std::collections::HashSet::with_capacity(roster.len());
        for &u in roster {
            if !seen.insert(u) {
                return Err(SecAggError::DuplicateRosterEntry(u));
            }
        }
        Ok(Self {
            scheme,
            master_seed,
            roster: roster.to_vec(),
            length,
        })
    }

    pub fn roster(&self) -> &[u64] {
        &self.roster
    }

    /// The zero-sum mask for one participant.
    pub fn mask_for(&self, user: u64) -> Result<FieldVector, SecAggError> {
        let pos = self
            .roster
            .iter()
            .position(|&u| u == user)
            .ok_or(SecAggError::UnknownParticipant(user))?;
        let mut mask = FieldVector::zeros(self.length);
        match self.scheme {
            MaskScheme::Complete => {
                // xi_i = sum_{o > i} PRG(s_{i,o}) - sum_{o < i} PRG(s_{o,i}),
                // ordering by roster position.
                for (o_pos, &o) in self.roster.iter().enumerate() {
                    if o_pos == pos {
                        continue;
                    }
                    if pos < o_pos {
                        mask.add_assign(&pair_stream(self.master_seed, user, o, self.length))?;
                    } else {
                        mask.sub_assign(&pair_stream(self.master_seed, o, user, self.length))?;
                    }
                }
            }
            MaskScheme::Ring => {
                let n = self.roster.len();
                let next = self.roster[(pos + 1) % n];
                let prev = self.roster[(pos + n - 1) % n];
                mask.add_assign(&pair_stream(self.master_seed, user, next, self.length))?;
                mask.sub_assign(&pair_stream(self.master_seed, prev, user, self.length))?;
            }
        }
        Ok(mask)
    }

    /// Materialize every participant's mask.
    pub fn generate_all(&self) -> Result<MaskSet, SecAggError> {
        let masks = self
            .roster
            .iter()
            .map(|&u| Ok((u, self.mask_for(u)?)))
            .collect::<Result<Vec<_>, SecAggError>>()?;
        Ok(MaskSet { masks })
    }
}

/// All masks for one round; sums to zero elementwise by construction.
#[derive(Debug)]
pub struct MaskSet {
    masks: Vec<(u64, FieldVector)>,
}

impl MaskSet {
    pub fn mask_for(&self, user: u64) -> Option<&FieldVector> {
        self.masks
            .iter()
            .find(|(u, _)| *u == user)
            .map(|(_, m)| m)
    }

    pub fn iter(&self) -> impl Iterator<Item = (u64, &FieldVector)> {
        self.masks.iter().map(|(u, m)| (*u, m))
    }

    pub fn sum(&self) -> FieldVector {
        let len = self.masks.first().map_or(0, |(_, m)| m.len());
        let mut acc = FieldVector::zeros(len);
        for (_, m) in &self.masks {
            acc.add_assign(m).expect("uniform mask length");
        }
        acc
    }
}

/// Eq. 4-style mask generation for a full roster, complete pairwise
/// topology.
pub fn ttp_generate_masks(
    roster: &[u64],
    length: usize,
    master_seed: u64,
) -> Result<MaskSet, SecAggError> {
    MaskIssuer::new(MaskScheme::Complete, master_seed, roster, length)?.generate_all()
}

/// Server-side aggregation: modular sum of one upload per roster member,
/// decoded back to signed integers. Exact whenever each entry of the true
/// signed sum has magnitude below 2^63.
pub fn unmask_aggregate(
    uploads: &[(u64, FieldVector)],
    roster: &[u64],
) -> Result<Vec<i64>, SecAggError> {
    let mut remaining: std::collections::HashSet<u64> = roster.iter().copied().collect();
    if uploads.is_empty() {
        return Err(SecAggError::RosterTooSmall(0));
    }
    let length = uploads[0].1.len();
    let mut acc = FieldVector::zeros(length);
    for (user, upload) in uploads {
        if !roster.contains(user) {
            return Err(SecAggError::UnknownParticipant(*user));
        }
        if !remaining.remove(user) {
            return Err(SecAggError::DuplicateParticipant(*user));
        }
        acc.add_assign(upload)?;
    }
    if let Some(&missing) = remaining.iter().next() {
        return Err(SecAggError::MissingParticipant(missing));
    }
    Ok(acc.decode_signed())
}

/// Static capacity check: n * max|quantized| * max|attribute entry| must
/// stay below 2^63 so aggregated sums decode exactly.
pub fn aggregation_capacity_ok(n: usize, levels: i64, max_attr_entry: i64) -> bool {
    (n as i128)
        .checked_mul(levels as i128)
        .and_then(|x| x.checked_mul(max_attr_entry as i128))
        .is_some_and(|bound| bound < (1i128 << 63))
}

/// In-process upload message, byte layout documented for a potential
/// networked transport: round id, user index and payload length as
/// little-endian u64, then the residues, little-endian u64 each.
pub fn encode_upload(round: u64, user: u64, payload: &FieldVector) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + 8 * payload.len());
    out.extend_from_slice(&round.to_le_bytes());
    out.extend_from_slice(&user.to_le_bytes());
    out.extend_from_slice(&(payload.len() as u64).to_le_bytes());
    for &r in payload.residues() {
        out.extend_from_slice(&r.to_le_bytes());
    }
    out
}

/// Inverse of [`encode_upload`]. Returns (round, user, payload).
pub fn decode_upload(bytes: &[u8]) -> Option<(u64, u64, FieldVector)> {
    if bytes.len() < 24 || (bytes.len() - 24) % 8 != 0 {
        return None;
    }
    let word = |i: usize| u64::from_le_bytes(bytes[8 * i..8 * i + 8].try_into().unwrap());
    let (round, user, len) = (word(0), word(1), word(2));
    if bytes.len() != 24 + 8 * len as usize {
        return None;
    }
    let entries = (0..len as usize).map(|i| word(3 + i)).collect();
    Some((round, user, FieldVector { entries }))
}
