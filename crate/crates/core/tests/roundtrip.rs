mod common;

use chemlm::decimal::Precision;
use chemlm::formats::{self, prune_pocket, TargetRange};
use chemlm::structure::Structure;
use chemlm::tokenizer::{build_vocab, decode, encode, round_coords, LatticeMode, Scheme, SchemeKind};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn corpus(kind: usize, n: usize, seed: u64, precision: Precision) -> Vec<Structure> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| round_coords(&common::structure(&mut rng, kind), precision))
        .collect()
}

fn codec_round_trip(kind: usize, scheme_kind: SchemeKind, mode: LatticeMode) {
    for places in 1..=3u8 {
        let p = Precision::new(places).unwrap();
        let structures = corpus(kind, 500, 17 + places as u64 + 10 * kind as u64, p);
        let scheme = Scheme::new(scheme_kind, p).with_lattice_mode(mode);
        let vocab = build_vocab(&structures, scheme).unwrap();
        for s in &structures {
            let seq = encode(s, &vocab).unwrap();
            let back = decode(&seq.ids, &vocab).unwrap();
            assert_eq!(&back, s, "scheme {scheme_kind} precision {places}");
        }
    }
}

#[test]
fn molecule_atom_coord() {
    codec_round_trip(0, SchemeKind::AtomCoord, LatticeMode::WholeToken);
}

#[test]
fn molecule_char() {
    codec_round_trip(0, SchemeKind::Char, LatticeMode::WholeToken);
}

#[test]
fn crystal_atom_coord_whole_token() {
    codec_round_trip(1, SchemeKind::AtomCoord, LatticeMode::WholeToken);
}

#[test]
fn crystal_atom_coord_char_lattice() {
    codec_round_trip(1, SchemeKind::AtomCoord, LatticeMode::Char);
}

#[test]
fn crystal_char() {
    codec_round_trip(1, SchemeKind::Char, LatticeMode::WholeToken);
}

#[test]
fn pocket_atom_coord() {
    codec_round_trip(2, SchemeKind::AtomCoord, LatticeMode::WholeToken);
}

#[test]
fn pocket_char() {
    codec_round_trip(2, SchemeKind::Char, LatticeMode::WholeToken);
}

#[test]
fn atom_coord_length_rule() {
    let p = Precision::new(2).unwrap();
    for kind in 0..3 {
        let structures = corpus(kind, 100, 99, p);
        let vocab = build_vocab(&structures, Scheme::new(SchemeKind::AtomCoord, p)).unwrap();
        for s in &structures {
            let extra = if kind == 1 { 6 } else { 0 };
            assert_eq!(encode(s, &vocab).unwrap().len(), 2 + 4 * s.atom_count() + extra);
        }
    }
}

#[test]
fn vocabulary_ignores_corpus_order() {
    let p = Precision::new(2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for kind in 0..3 {
        for scheme_kind in [SchemeKind::Char, SchemeKind::AtomCoord] {
            let mut structures = corpus(kind, 60, 3, p);
            let scheme = Scheme::new(scheme_kind, p);
            let a = build_vocab(&structures, scheme).unwrap();
            structures.shuffle(&mut rng);
            let b = build_vocab(&structures, scheme).unwrap();
            assert_eq!(a.to_text(), b.to_text());
            assert_eq!(a.hash(), b.hash());
        }
    }
}

#[test]
fn parse_inverts_write_for_every_format() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for kind in 0..3 {
        for i in 0..1200 {
            let s = common::structure(&mut rng, kind);
            let p = Precision::new(1 + (i % 3) as u8).unwrap();
            let doc = formats::write(&s, p);
            let back = formats::parse(&doc).unwrap();
            assert_eq!(back, round_coords(&s, p), "{}", doc.text);
            assert_eq!(formats::write(&s, p).text, doc.text);
        }
    }
}

#[test]
fn prune_keeps_atom_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..50 {
        let p = common::pocket(&mut rng);
        let n = p.atoms.len();
        let target = TargetRange::new(n / 3, n / 2).unwrap();
        let pruned = prune_pocket(&p, [0.0; 3], target).pocket;
        let mut it = p.atoms.iter();
        for a in &pruned.atoms {
            assert!(it.any(|b| b == a), "pruned atoms are not a subsequence");
        }
    }
}
