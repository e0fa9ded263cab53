//! Exhaustive checks of the pattern engine against brute force.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;

use pulsetone::pattern::{canonicalize, count_bounds, enumerate_unique, spectrally_equivalent, Pattern};

fn bits_of(m: u32, n: usize) -> Vec<bool> {
    (0..n).map(|i| (m >> i) & 1 == 1).collect()
}

fn text(bits: &[bool]) -> String {
    bits.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

/// Tone powers by direct summation, rounded so rounding noise cannot split
/// a group.
fn power_key(bits: &[bool]) -> Vec<i64> {
    let n = bits.len();
    (0..n)
        .map(|k| {
            let (mut re, mut im) = (0.0, 0.0);
            for (i, &b) in bits.iter().enumerate() {
                if b {
                    let phase = -2.0 * PI * (k * i) as f64 / n as f64;
                    re += phase.cos();
                    im += phase.sin();
                }
            }
            ((re * re + im * im) * 1e6).round() as i64
        })
        .collect()
}

/// Every rotation and reversal of `bits`.
fn orbit(bits: &[bool]) -> BTreeSet<String> {
    let n = bits.len();
    let mut out = BTreeSet::new();
    for r in 0..n {
        let rot: Vec<bool> = (0..n).map(|i| bits[(i + r) % n]).collect();
        let rev: Vec<bool> = rot.iter().rev().copied().collect();
        out.insert(text(&rot));
        out.insert(text(&rev));
    }
    out
}

fn complement(s: &str) -> String {
    s.chars().map(|c| if c == '1' { '0' } else { '1' }).collect()
}

/// Brute-force spectral groups over all non-silent N-bit patterns.
fn brute_force_groups(n: usize) -> HashMap<Vec<i64>, BTreeSet<String>> {
    let mut groups: HashMap<Vec<i64>, BTreeSet<String>> = HashMap::new();
    for m in 1..(1u32 << n) {
        let bits = bits_of(m, n);
        groups.entry(power_key(&bits)).or_default().insert(text(&bits));
    }
    groups
}

#[test]
fn classes_biject_with_brute_force_groups() {
    for n in 1..=12 {
        let groups = brute_force_groups(n);
        let classes = enumerate_unique(n).unwrap();
        let mut covered: BTreeSet<Vec<i64>> = BTreeSet::new();

        for class in &classes {
            let rep_bits = class.canonical.bits().to_vec();
            let key = power_key(&rep_bits);
            let group = &groups[&key];

            // The class, expanded to full orbits, is exactly one group.
            let expanded: BTreeSet<String> = class.members.iter().flat_map(|m| orbit(m.bits())).collect();
            assert_eq!(&expanded, group, "N={n} class {}", class.canonical);
            assert!(covered.insert(key), "N={n}: two classes share a group");

            // Below half occupancy the complement is a distinct group that
            // the enumeration deliberately leaves out.
            if 2 * class.set_bits() < n {
                let dual_group: BTreeSet<String> = expanded.iter().map(|s| complement(s)).collect();
                let dual_key = power_key(class.canonical.dual().bits());
                assert_eq!(groups[&dual_key], dual_group, "N={n} dual of {}", class.canonical);
                assert!(covered.insert(dual_key), "N={n}: dual group collides");
            }
        }
        assert_eq!(covered.len(), groups.len(), "N={n}: uncovered groups");
    }
}

#[test]
fn bounds_bracket_enumeration() {
    for n in 1..=12 {
        let count = enumerate_unique(n).unwrap().len() as u64;
        let b = count_bounds(n).unwrap();
        assert!(b.lower <= count && count <= b.upper, "N={n}: {} <= {count} <= {}", b.lower, b.upper);
    }
    assert_eq!(count_bounds(8).unwrap().lower, 6);
    assert!(count_bounds(64).is_ok());
    assert!(count_bounds(65).is_err());
}

#[test]
fn canonical_form_is_orbit_minimum() {
    for n in 1..=12 {
        for m in 0..(1u32 << n) {
            let bits = bits_of(m, n);
            let p = Pattern::new(bits.clone()).unwrap();
            let c = canonicalize(&p);
            let expected = orbit(&bits).into_iter().next().unwrap();
            assert_eq!(c.to_string(), expected);
            assert_eq!(canonicalize(&c), c);
        }
    }
}

#[test]
fn eight_bit_catalog_contains_the_two_tone_pattern() {
    let classes = enumerate_unique(8).unwrap();
    let p = Pattern::parse("10011001").unwrap();
    let hits: Vec<_> = classes.iter().filter(|c| c.contains(&p)).collect();
    assert_eq!(hits.len(), 1);
    assert_eq!(hits[0].canonical.to_string(), "00110011");
    assert_eq!(hits[0].distance_set().as_slice(), &[1, 3, 1, 3]);
}

#[test]
fn spectral_equivalence_examples() {
    let eq = |a: &str, b: &str| {
        spectrally_equivalent(&Pattern::parse(a).unwrap(), &Pattern::parse(b).unwrap(), 1e-9).unwrap()
    };
    assert!(eq("10000000", "01000000"));
    assert!(!eq("10000000", "01111111"));
    assert!(!eq("10011001", "10001001"));
    assert!(spectrally_equivalent(&Pattern::parse("10").unwrap(), &Pattern::parse("100").unwrap(), 1e-9).is_err());
}
