//! CSR bit patterns, their cyclic invariants and the unique-pattern catalog.
//!
//! A pattern of N bits is the content of the circular shift register; cell
//! `k` is emitted on clock tick `k` of every period. Two patterns produce the
//! same set of tones with the same relative powers when they differ only by a
//! rotation (a phase shift of the train) or a reversal (time reversal of an
//! infinite train). Complementary ("dual") patterns share every tone except
//! the ones at multiples of `f_clk`.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectrum;

/// Largest register length accepted by [`enumerate_unique`]. The search visits
/// every composition of N into at most N/2 parts, so the cost roughly doubles
/// per extra bit (N = 24 takes a few seconds in release builds).
pub const MAX_ENUMERATION_BITS: usize = 24;

/// Largest register length accepted by [`count_bounds`].
pub const MAX_BOUNDS_BITS: usize = 64;

/// Default relative tolerance for comparing analytic spectral signatures.
pub const DEFAULT_REL_TOL: f64 = 1e-9;

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct Pattern {
    bits: Vec<bool>,
}

impl Pattern {
    pub fn new(bits: Vec<bool>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::InvalidPattern("pattern must have at least one bit".into()));
        }
        Ok(Self { bits })
    }

    /// Parses a string of `0`/`1` characters. Whitespace and `_` are ignored,
    /// so `"1001 1001"` and `"10011001"` are the same pattern.
    pub fn parse(text: &str) -> Result<Self> {
        let mut bits = Vec::with_capacity(text.len());
        for ch in text.chars() {
            match ch {
                '0' => bits.push(false),
                '1' => bits.push(true),
                c if c.is_whitespace() || c == '_' => {}
                c => return Err(Error::InvalidPattern(format!("unexpected character {c:?}"))),
            }
        }
        Self::new(bits)
    }

    pub fn zeros(n_bits: usize) -> Result<Self> {
        Self::new(vec![false; n_bits])
    }

    pub fn ones(n_bits: usize) -> Result<Self> {
        Self::new(vec![true; n_bits])
    }

    /// Builds a pattern whose first set bit is cell 0 and whose cyclic gaps
    /// are `distances`.
    pub fn from_distances(distances: &[usize]) -> Result<Self> {
        if distances.is_empty() || distances.contains(&0) {
            return Err(Error::InvalidArgument("distances must be positive and non-empty".into()));
        }
        let n: usize = distances.iter().sum();
        let mut bits = vec![false; n];
        let mut pos = 0;
        for &d in distances {
            bits[pos] = true;
            pos += d;
        }
        Self::new(bits)
    }

    /// Pattern from an integer key where cell 0 is the most significant of
    /// `n_bits` bits. Lexicographic order of pattern strings equals numeric
    /// order of keys.
    pub fn from_key(key: u64, n_bits: usize) -> Result<Self> {
        if n_bits == 0 || n_bits > 64 {
            return Err(Error::InvalidArgument(format!("key patterns need 1..=64 bits, got {n_bits}")));
        }
        let bits = (0..n_bits).map(|k| key >> (n_bits - 1 - k) & 1 == 1).collect();
        Self::new(bits)
    }

    pub fn key(&self) -> Option<u64> {
        if self.bits.len() > 64 {
            return None;
        }
        Some(self.bits.iter().fold(0u64, |acc, &b| acc << 1 | b as u64))
    }

    pub fn n_bits(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Cyclic access: bit `k` is bit `k mod N`.
    pub fn bit(&self, k: usize) -> bool {
        self.bits[k % self.bits.len()]
    }

    pub fn set_bits(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// The all-zero pattern emits nothing.
    pub fn is_silent(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn set_positions(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().filter(|(_, &b)| b).map(|(k, _)| k)
    }

    pub fn rotate_left(&self, r: usize) -> Self {
        let mut bits = self.bits.clone();
        let n = bits.len();
        bits.rotate_left(r % n);
        Self { bits }
    }

    pub fn reversed(&self) -> Self {
        let mut bits = self.bits.clone();
        bits.reverse();
        Self { bits }
    }

    pub fn dual(&self) -> Self {
        Self { bits: self.bits.iter().map(|b| !b).collect() }
    }

    pub fn canonical(&self) -> Self {
        canonicalize(self)
    }

    pub fn distance_set(&self) -> Result<DistanceSet> {
        distance_set(self)
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.bits {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Pattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl Serialize for Pattern {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Pattern {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let text = String::deserialize(deserializer)?;
        Pattern::parse(&text).map_err(serde::de::Error::custom)
    }
}

/// Cyclic gaps between consecutive set bits. Sums to N; a gap of 1 means two
/// adjacent set bits.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize)]
#[serde(transparent)]
pub struct DistanceSet {
    distances: Vec<usize>,
}

impl DistanceSet {
    pub fn as_slice(&self) -> &[usize] {
        &self.distances
    }

    pub fn len(&self) -> usize {
        self.distances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distances.is_empty()
    }

    pub fn total(&self) -> usize {
        self.distances.iter().sum()
    }
}

/// Gaps between set bits, starting from the lowest-index set bit.
pub fn distance_set(p: &Pattern) -> Result<DistanceSet> {
    let n = p.n_bits();
    let positions: Vec<usize> = p.set_positions().collect();
    if positions.is_empty() {
        return Err(Error::NoSetBits);
    }
    let distances = positions
        .iter()
        .enumerate()
        .map(|(i, &pos)| {
            let next = positions[(i + 1) % positions.len()];
            (next + n - pos - 1) % n + 1
        })
        .collect();
    Ok(DistanceSet { distances })
}

/// Lexicographically smallest string over all rotations and reversals
/// (bracelet canonical form).
pub fn canonicalize(p: &Pattern) -> Pattern {
    let n = p.n_bits();
    let rev = p.reversed();
    let mut best = p.bits.clone();
    for src in [&p.bits, &rev.bits] {
        for r in 0..n {
            let rotated = src[r..].iter().chain(&src[..r]);
            if rotated.clone().lt(best.iter()) {
                best = rotated.copied().collect();
            }
        }
    }
    Pattern { bits: best }
}

pub fn dual(p: &Pattern) -> Pattern {
    p.dual()
}

/// A set of patterns sharing the same analytic tone powers.
#[derive(Clone, Debug, PartialEq)]
pub struct EquivalenceClass {
    /// Lexicographically smallest bracelet-canonical member.
    pub canonical: Pattern,
    /// Bracelet-canonical representatives of every rotation/mirror orbit in
    /// the class, sorted. Every rotation or reversal of a member belongs too.
    pub members: Vec<Pattern>,
    /// Tone powers on the grid `k = 0..N-1`, normalized to their maximum.
    pub spectral_signature: Vec<f64>,
}

impl EquivalenceClass {
    pub fn set_bits(&self) -> usize {
        self.canonical.set_bits()
    }

    pub fn distance_set(&self) -> DistanceSet {
        // Classes are built from emitting patterns only.
        distance_set(&self.canonical).expect("class representative has set bits")
    }

    /// True when `p` (in any rotation or reversal) is a member.
    pub fn contains(&self, p: &Pattern) -> bool {
        let c = canonicalize(p);
        self.members.binary_search_by(|m| m.bits.cmp(&c.bits)).is_ok()
    }
}

/// Relative tone powers `|c_k|^2 / max |c_k|^2` for `k = 0..N-1`.
pub fn spectral_signature(p: &Pattern) -> Vec<f64> {
    let powers = spectrum::tone_spectrum(p, 1.0)
        .expect("unit clock is valid")
        .powers();
    let max = powers.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return powers;
    }
    powers.into_iter().map(|x| x / max).collect()
}

/// True iff the normalized tone-power signatures agree within `rel_tol` at
/// every grid point.
pub fn spectrally_equivalent(p1: &Pattern, p2: &Pattern, rel_tol: f64) -> Result<bool> {
    if p1.n_bits() != p2.n_bits() {
        return Err(Error::LengthMismatch(p1.n_bits(), p2.n_bits()));
    }
    let a = spectral_signature(p1);
    let b = spectral_signature(p2);
    Ok(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= rel_tol))
}

// Integer-key helpers. Keys hold cell 0 in the most significant of n bits.

fn low_mask(n: usize) -> u64 {
    if n == 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn rotl_key(key: u64, r: usize, n: usize) -> u64 {
    if r.is_multiple_of(n) {
        return key;
    }
    let r = r % n;
    ((key << r) | (key >> (n - r))) & low_mask(n)
}

fn reverse_key(key: u64, n: usize) -> u64 {
    key.reverse_bits() >> (64 - n)
}

fn canonical_key(key: u64, n: usize) -> u64 {
    let rev = reverse_key(key, n);
    (0..n)
        .flat_map(|r| [rotl_key(key, r, n), rotl_key(rev, r, n)])
        .min()
        .unwrap_or(key)
}

/// Cyclic autocorrelation of the bit sequence. Two patterns have equal
/// `|DFT|` iff their autocorrelations are equal, so this is an exact
/// integer fingerprint of the tone-power signature.
fn autocorrelation_key(key: u64, n: usize) -> Vec<u32> {
    (0..n).map(|d| (key & rotl_key(key, d, n)).count_ones()).collect()
}

fn key_from_distances(distances: &[usize], n: usize) -> u64 {
    let mut key = 0u64;
    let mut pos = 0;
    for &d in distances {
        key |= 1 << (n - 1 - pos);
        pos += d;
    }
    key
}

/// Partitions of `n` into exactly `parts` positive parts, each ascending.
fn partitions_exact(n: usize, parts: usize) -> Vec<Vec<usize>> {
    fn rec(remaining: usize, left: usize, min_part: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 1 {
            if remaining >= min_part {
                cur.push(remaining);
                out.push(cur.clone());
                cur.pop();
            }
            return;
        }
        // Remaining parts are all >= part, so part * left <= remaining.
        let mut part = min_part;
        while part * left <= remaining {
            cur.push(part);
            rec(remaining - part, left - 1, part, cur, out);
            cur.pop();
            part += 1;
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        rec(n, parts, 1, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

fn next_permutation(seq: &mut [usize]) -> bool {
    if seq.len() < 2 {
        return false;
    }
    let mut i = seq.len() - 1;
    while i > 0 && seq[i - 1] >= seq[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = seq.len() - 1;
    while seq[j] <= seq[i - 1] {
        j -= 1;
    }
    seq.swap(i - 1, j);
    seq[i..].reverse();
    true
}

/// True when no rotation of `seq` is lexicographically smaller, i.e. `seq`
/// is the representative of its cyclic-permutation class.
fn is_least_rotation(seq: &[usize]) -> bool {
    let n = seq.len();
    (1..n).all(|r| {
        let rotated = seq[r..].iter().chain(&seq[..r]);
        !rotated.lt(seq.iter())
    })
}

/// Spectrally unique patterns of an N-bit register.
///
/// For each set-bit count `s = 1..=N/2`, every multiset of `s` distances
/// summing to N is expanded into its non-cyclic permutations. A permutation is
/// kept unless one of its cyclic permutations, its mirror, or its dual was
/// already emitted (the dual test applies within one `s` level, which is where
/// `s = N/2` self-complements collapse). The all-ones pattern is added last.
/// Survivors with identical tone powers are then merged, so the returned
/// classes are pairwise spectrally distinct. Duals with `s > N/2` are not
/// listed; each one is the complement of a listed class and differs from it
/// only in the power of the tones at multiples of `f_clk`.
pub fn enumerate_unique(n: usize) -> Result<Vec<EquivalenceClass>> {
    if n == 0 || n > MAX_ENUMERATION_BITS {
        return Err(Error::InvalidArgument(format!(
            "enumeration requires 1 <= N <= {MAX_ENUMERATION_BITS}, got {n}"
        )));
    }
    let mask = low_mask(n);
    let mut seen: HashSet<u64> = HashSet::new();
    let mut accepted: Vec<u64> = Vec::new();
    let mut dual_duplicates: Vec<u64> = Vec::new();

    for s in 1..=n / 2 {
        let mut level_duals: HashSet<u64> = HashSet::new();
        for mut perm in partitions_exact(n, s) {
            loop {
                if is_least_rotation(&perm) {
                    let key = key_from_distances(&perm, n);
                    let ck = canonical_key(key, n);
                    if seen.insert(ck) {
                        if level_duals.contains(&ck) {
                            dual_duplicates.push(ck);
                        } else {
                            level_duals.insert(canonical_key(!key & mask, n));
                            accepted.push(ck);
                        }
                    }
                }
                if !next_permutation(&mut perm) {
                    break;
                }
            }
        }
    }
    accepted.push(mask);

    let mut group_of: HashMap<Vec<u32>, usize> = HashMap::new();
    let mut groups: Vec<Vec<u64>> = Vec::new();
    for &ck in accepted.iter().chain(&dual_duplicates) {
        let sig = autocorrelation_key(ck, n);
        let idx = *group_of.entry(sig).or_insert_with(|| {
            groups.push(Vec::new());
            groups.len() - 1
        });
        groups[idx].push(ck);
    }

    let mut classes: Vec<EquivalenceClass> = groups
        .into_iter()
        .map(|mut keys| {
            keys.sort_unstable();
            keys.dedup();
            let members: Vec<Pattern> = keys
                .iter()
                .map(|&k| Pattern::from_key(k, n).expect("n within key range"))
                .collect();
            let canonical = members[0].clone();
            let spectral_signature = spectral_signature(&canonical);
            EquivalenceClass { canonical, members, spectral_signature }
        })
        .collect();
    classes.sort_by(|a, b| {
        a.set_bits()
            .cmp(&b.set_bits())
            .then_with(|| a.canonical.bits.cmp(&b.canonical.bits))
    });
    Ok(classes)
}

/// Count bounds for [`enumerate_unique`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct CountBounds {
    pub lower: u64,
    pub upper: u64,
}

/// `lower` counts subsets of `{1..N}` with distinct elements summing to N
/// (partitions into distinct parts). `upper` adds, for every distance multiset
/// with at most N/2 elements, its number of distinct cyclic arrangements.
pub fn count_bounds(n: usize) -> Result<CountBounds> {
    if n == 0 || n > MAX_BOUNDS_BITS {
        return Err(Error::InvalidArgument(format!(
            "count bounds require 1 <= N <= {MAX_BOUNDS_BITS}, got {n}"
        )));
    }
    let lower = distinct_partition_count(n);
    let mut extra: u64 = 0;
    for s in 1..=n / 2 {
        for parts in partitions_exact(n, s) {
            extra += necklace_count(&multiplicities(&parts));
        }
    }
    Ok(CountBounds { lower, upper: lower + extra })
}

fn distinct_partition_count(n: usize) -> u64 {
    // ways[t]: subsets of {1..i} summing to t.
    let mut ways = vec![0u64; n + 1];
    ways[0] = 1;
    for part in 1..=n {
        for t in (part..=n).rev() {
            ways[t] += ways[t - part];
        }
    }
    ways[n]
}

fn multiplicities(sorted_parts: &[usize]) -> Vec<usize> {
    let mut out = Vec::new();
    let mut i = 0;
    while i < sorted_parts.len() {
        let j = i + sorted_parts[i..].iter().take_while(|&&p| p == sorted_parts[i]).count();
        out.push(j - i);
        i = j;
    }
    out
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn euler_phi(mut n: usize) -> u128 {
    let mut result = n as u128;
    let mut p = 2;
    while p * p <= n {
        if n.is_multiple_of(p) {
            while n.is_multiple_of(p) {
                n /= p;
            }
            result -= result / p as u128;
        }
        p += 1;
    }
    if n > 1 {
        result -= result / n as u128;
    }
    result
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

fn multinomial(counts: &[usize]) -> u128 {
    let mut total = 0;
    let mut acc = 1u128;
    for &c in counts {
        total += c;
        acc *= binomial(total, c);
    }
    acc
}

/// Distinct cyclic arrangements of a multiset with the given multiplicities
/// (Burnside over the rotation group).
fn necklace_count(mult: &[usize]) -> u64 {
    let len: usize = mult.iter().sum();
    let g = mult.iter().fold(0, |acc, &m| gcd(acc, m));
    let mut sum = 0u128;
    for d in 1..=g {
        if g % d == 0 {
            let reduced: Vec<usize> = mult.iter().map(|&m| m / d).collect();
            sum += euler_phi(d) * multinomial(&reduced);
        }
    }
    (sum / len as u128) as u64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> Pattern {
        Pattern::parse(s).unwrap()
    }

    #[test]
    fn distance_set_examples() {
        let d = distance_set(&p("10011001")).unwrap();
        assert_eq!(d.as_slice(), &[3, 1, 3, 1]);
        assert_eq!(distance_set(&p("10000000")).unwrap().as_slice(), &[8]);
        assert_eq!(distance_set(&p("11111111")).unwrap().as_slice(), &[1; 8]);
        assert_eq!(distance_set(&p("0111 1111")).unwrap().as_slice(), &[1, 1, 1, 1, 1, 1, 2]);
        assert!(matches!(distance_set(&p("0000")), Err(Error::NoSetBits)));
    }

    #[test]
    fn parse_ignores_spaces() {
        assert_eq!(p("1001 1001"), p("10011001"));
        assert_eq!(p("1001_1001").to_string(), "10011001");
        assert!(Pattern::parse("10a1").is_err());
        assert!(Pattern::parse("   ").is_err());
    }

    #[test]
    fn canonical_examples() {
        assert_eq!(canonicalize(&p("10000000")), canonicalize(&p("01000000")));
        assert_eq!(canonicalize(&p("11010000")), canonicalize(&p("11000010")));
        assert_eq!(canonicalize(&p("11111111")), p("11111111"));
        assert_eq!(canonicalize(&p("10011001")), p("00110011"));
    }

    #[test]
    fn dual_examples() {
        assert_eq!(dual(&p("10000000")), p("01111111"));
        let d = dual(&p("10011001"));
        assert_eq!(d, p("01100110"));
        assert_eq!(canonicalize(&d), canonicalize(&p("10011001")));
    }

    #[test]
    fn key_round_trip_matches_canonical() {
        for key in 1u64..256 {
            let pat = Pattern::from_key(key, 8).unwrap();
            assert_eq!(pat.key(), Some(key));
            assert_eq!(canonical_key(key, 8), canonicalize(&pat).key().unwrap());
        }
    }

    #[test]
    fn from_distances_inverts_distance_set() {
        let pat = Pattern::from_distances(&[3, 1, 3, 1]).unwrap();
        assert_eq!(pat, p("10011001"));
        assert!(Pattern::from_distances(&[2, 0]).is_err());
    }

    #[test]
    fn partitions_and_permutations() {
        assert_eq!(partitions_exact(6, 2), vec![vec![1, 5], vec![2, 4], vec![3, 3]]);
        let mut v = vec![1, 1, 2];
        let mut count = 1;
        while next_permutation(&mut v) {
            count += 1;
        }
        assert_eq!(count, 3);
        assert!(is_least_rotation(&[1, 1, 2]));
        assert!(!is_least_rotation(&[1, 2, 1]));
    }

    #[test]
    fn necklaces_by_burnside() {
        // {1,1,2,2}: 1122, 1212 -> 2 necklaces.
        assert_eq!(necklace_count(&[2, 2]), 2);
        // Binary necklaces of length 6 with 3 ones: 4.
        assert_eq!(necklace_count(&[3, 3]), 4);
        assert_eq!(necklace_count(&[1, 1, 1]), 2);
    }

    #[test]
    fn enumerate_small() {
        let one = enumerate_unique(1).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].canonical, p("1"));

        let eight = enumerate_unique(8).unwrap();
        let class = eight.iter().filter(|c| c.contains(&p("1001 1001"))).count();
        assert_eq!(class, 1);
        assert!(eight.iter().all(|c| c.set_bits() <= 4 || c.set_bits() == 8));
        assert!(enumerate_unique(0).is_err());
        assert!(enumerate_unique(MAX_ENUMERATION_BITS + 1).is_err());
    }

    #[test]
    fn bounds_examples() {
        assert_eq!(count_bounds(1).unwrap(), CountBounds { lower: 1, upper: 1 });
        assert_eq!(count_bounds(8).unwrap().lower, 6);
        assert!(count_bounds(0).is_err());
    }

    #[test]
    fn spectral_equivalence_examples() {
        assert!(spectrally_equivalent(&p("10000000"), &p("01000000"), DEFAULT_REL_TOL).unwrap());
        assert!(!spectrally_equivalent(&p("10000000"), &p("01111111"), DEFAULT_REL_TOL).unwrap());
        assert!(!spectrally_equivalent(&p("10011001"), &p("10001001"), DEFAULT_REL_TOL).unwrap());
        assert!(matches!(
            spectrally_equivalent(&p("101"), &p("1010"), DEFAULT_REL_TOL),
            Err(Error::LengthMismatch(3, 4))
        ));
    }
}
