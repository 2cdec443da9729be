//! Reference files for the three file grammars and their token streams.

use std::path::Path;

use chemlm::decimal::Precision;
use chemlm::formats::{self, FileDocument};
use chemlm::metrics::{crystal_structural_validity, pocket_overlap_check, pocket_residue_check, ResidueCompositionTable};
use chemlm::structure::Structure;
use chemlm::tokenizer::{build_vocab, decode, encode, round_coords, LatticeMode, Scheme, SchemeKind, Vocabulary};

fn load(name: &str) -> (FileDocument, Structure) {
    let doc = FileDocument::read(&Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name)).unwrap();
    let s = formats::parse(&doc).unwrap();
    (doc, s)
}

fn tokens(s: &Structure, scheme: Scheme) -> Vec<String> {
    let vocab = build_vocab(std::slice::from_ref(s), scheme).unwrap();
    let ids = encode(s, &vocab).unwrap().ids;
    assert_eq!(decode(&ids, &vocab).unwrap(), round_coords(s, scheme.precision));
    ids[1..ids.len() - 1].iter().map(|&i| vocab.token(i).unwrap().to_string()).collect()
}

fn split(text: &str) -> Vec<String> {
    text.split('|').map(String::from).collect()
}

#[test]
fn files_rewrite_byte_identically() {
    let p3 = Precision::new(3).unwrap();
    for name in ["water.xyz", "srtio3.cif", "gly_ala.pdb"] {
        let (doc, s) = load(name);
        assert_eq!(formats::write(&s, p3).text, doc.text, "{name}");
    }
}

#[test]
fn water_tokens() {
    let (_, s) = load("water.xyz");
    let p = Precision::new(2).unwrap();
    let s = round_coords(&s, p);
    assert_eq!(
        tokens(&s, Scheme::new(SchemeKind::AtomCoord, p)),
        split("O|0.00|0.00|0.12|H|0.00|0.76|-0.47|H|0.00|-0.76|-0.47")
    );
    assert_eq!(
        tokens(&s, Scheme::new(SchemeKind::Char, Precision::new(1).unwrap())).concat(),
        "O 0.0 0.0 0.1#H 0.0 0.8 -0.5#H 0.0 -0.8 -0.5#"
    );
}

#[test]
fn perovskite_tokens() {
    let (_, s) = load("srtio3.cif");
    assert!(crystal_structural_validity(s.as_crystal().unwrap()).unwrap().valid);
    let p = Precision::new(2).unwrap();
    let s = round_coords(&s, p);
    let whole = tokens(&s, Scheme::new(SchemeKind::AtomCoord, p));
    assert_eq!(whole.len(), 6 + 4 * 5);
    assert_eq!(
        whole[..10],
        split("3.91|3.91|3.91|90.00|90.00|90.00|Sr|0.00|0.00|0.00")[..]
    );
    let by_char = tokens(&s, Scheme::new(SchemeKind::AtomCoord, p).with_lattice_mode(LatticeMode::Char));
    assert_eq!(by_char[..5], split("3|.|9|1|3")[..]);
    assert_eq!(
        tokens(&s, Scheme::new(SchemeKind::Char, p)).concat(),
        "3.91 3.91 3.91 90.00 90.00 90.00#Sr 0.00 0.00 0.00#Ti 0.50 0.50 0.50#\
         O 0.50 0.50 0.00#O 0.50 0.00 0.50#O 0.00 0.50 0.50#"
    );
}

#[test]
fn pocket_tokens() {
    let (_, s) = load("gly_ala.pdb");
    let p = s.as_pocket().unwrap();
    assert!(pocket_residue_check(p, ResidueCompositionTable::standard()).unwrap().valid);
    assert!(pocket_overlap_check(p, 1.1).unwrap().valid);
    let t = tokens(&s, Scheme::new(SchemeKind::AtomCoord, Precision::new(3).unwrap()));
    assert_eq!(t[..8], split("GLY-N|-1.195|0.318|0.000|GLY-C|0.000|1.145|0.000")[..]);
    assert_eq!(t[32..], split("ALA-C|3.760|-0.617|1.256")[..]);
}

#[test]
fn vocabulary_file_layout() {
    let (_, s) = load("water.xyz");
    let vocab = build_vocab(&[s], Scheme::new(SchemeKind::AtomCoord, Precision::new(3).unwrap())).unwrap();
    let text = vocab.to_text();
    assert_eq!(
        text,
        "chemlm-vocab 1\nkind=molecule\nscheme=atom_coord\nprecision=3\nlattice_mode=whole_token\ntokens=10\n\
         <pad>\n<bos>\n<eos>\n-0.467\n-0.757\n0.000\n0.117\n0.757\nH\nO\n"
    );
    assert_eq!(Vocabulary::from_text(&text).unwrap(), vocab);
}
