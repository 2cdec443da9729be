use std::ffi::{CStr, CString};
use std::ptr;

use chemlm_ffi::*;

fn last_error() -> String {
    let p = chemlm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn parse(format: ChemlmFormat, text: &str) -> *mut ChemlmStructure {
    let c = CString::new(text).unwrap();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { chemlm_structure_parse(format, c.as_ptr(), &mut s) }, ChemlmStatus::Ok);
    s
}

const WATER: &str = "3\nwater\nO 0.000 0.000 0.117\nH 0.000 0.757 -0.467\nH 0.000 -0.757 -0.467\n";

#[test]
fn structure_round_trip_and_queries() {
    let s = parse(ChemlmFormat::Xyz, WATER);
    unsafe {
        let mut kind = ChemlmKind::Crystal;
        assert_eq!(chemlm_structure_kind(s, &mut kind), ChemlmStatus::Ok);
        assert_eq!(kind, ChemlmKind::Molecule);
        let mut n = 0;
        assert_eq!(chemlm_structure_atom_count(s, &mut n), ChemlmStatus::Ok);
        assert_eq!(n, 3);

        let mut len = 0;
        assert_eq!(chemlm_structure_positions(s, ptr::null_mut(), 0, &mut len), ChemlmStatus::BufferTooSmall);
        assert_eq!(len, 9);
        let mut pos = vec![0.0; len];
        assert_eq!(chemlm_structure_positions(s, pos.as_mut_ptr(), pos.len(), &mut len), ChemlmStatus::Ok);
        assert_eq!(pos[4], 0.757);

        let mut valid = false;
        let mut reason = ptr::null_mut();
        assert_eq!(chemlm_structure_is_valid(s, &mut valid, &mut reason), ChemlmStatus::Ok);
        assert!(valid && reason.is_null());

        let mut text = ptr::null_mut();
        assert_eq!(chemlm_structure_write(s, 3, &mut text), ChemlmStatus::Ok);
        let written = CStr::from_ptr(text).to_str().unwrap().to_owned();
        chemlm_string_free(text);
        let again = parse(ChemlmFormat::Xyz, &written);
        let (mut k1, mut k2) = (ptr::null_mut(), ptr::null_mut());
        chemlm_structure_key(s, &mut k1);
        chemlm_structure_key(again, &mut k2);
        assert_eq!(CStr::from_ptr(k1), CStr::from_ptr(k2));
        assert!(CStr::from_ptr(k1).to_str().unwrap().starts_with("mol:"));
        chemlm_string_free(k1);
        chemlm_string_free(k2);
        chemlm_structure_free(again);
        chemlm_structure_free(s);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let bad = CString::new("2\n\nC 0 0 0\n").unwrap();
    let mut s = ptr::null_mut();
    unsafe {
        assert_eq!(chemlm_structure_parse(ChemlmFormat::Xyz, bad.as_ptr(), &mut s), ChemlmStatus::Parse);
        assert!(s.is_null());
        assert!(last_error().contains("atom count mismatch"), "{}", last_error());
        assert_eq!(chemlm_structure_parse(ChemlmFormat::Xyz, ptr::null(), &mut s), ChemlmStatus::NullPointer);
        assert_eq!(chemlm_structure_atom_count(ptr::null(), &mut 0), ChemlmStatus::NullPointer);

        let missing = CString::new("/nonexistent/x.xyz").unwrap();
        assert_eq!(chemlm_structure_read(missing.as_ptr(), &mut s), ChemlmStatus::Io);
        let ok = parse(ChemlmFormat::Xyz, WATER);
        assert!(chemlm_last_error().is_null());
        let mut text = ptr::null_mut();
        assert_eq!(chemlm_structure_write(ok, 7, &mut text), ChemlmStatus::InvalidArgument);
        chemlm_structure_free(ok);

        let mut d = 0.0;
        assert_eq!(chemlm_emd_1d(ptr::null(), 0, [1.0].as_ptr(), 1, &mut d), ChemlmStatus::InvalidArgument);
        assert_eq!(chemlm_emd_1d([0.0, 2.0].as_ptr(), 2, [1.0].as_ptr(), 1, &mut d), ChemlmStatus::Ok);
        assert_eq!(d, 1.0);
    }
}

#[test]
fn invalid_structures_report_a_reason() {
    let clash = "2\n\nC 0 0 0\nC 0 0 0.1\n";
    let s = parse(ChemlmFormat::Xyz, clash);
    unsafe {
        let mut valid = true;
        let mut reason = ptr::null_mut();
        assert_eq!(chemlm_structure_is_valid(s, &mut valid, &mut reason), ChemlmStatus::Ok);
        assert!(!valid);
        assert!(CStr::from_ptr(reason).to_str().unwrap().contains("clash"));
        chemlm_string_free(reason);
        chemlm_structure_free(s);
    }
}

#[test]
fn encode_decode_and_sample_through_handles() {
    use chemlm::decimal::Precision;
    use chemlm::structure::Structure;
    use chemlm::tokenizer::{build_vocab, Scheme, SchemeKind};
    use chemlm::train::{train, TrainConfig};
    use chemlm::transformer::ModelConfig;
    use rand::SeedableRng;

    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
    let corpus: Vec<Structure> = (0..8).map(|_| chemlm::synth::perovskite(&mut rng).into()).collect();
    let vocab = build_vocab(&corpus, Scheme::new(SchemeKind::AtomCoord, Precision::new(2).unwrap())).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let (vpath, mpath) = (dir.path().join("vocab.txt"), dir.path().join("model.ckpt"));
    vocab.save(&vpath).unwrap();
    let model = ModelConfig::small(vocab.len(), 40);
    let cfg = TrainConfig { batch_size: 4, total_steps: 2, ..TrainConfig::default() };
    let (ck, _) = train(corpus.clone(), vocab, model, cfg).unwrap();
    ck.save(&mpath).unwrap();

    let cif = chemlm::formats::write(&corpus[0], Precision::new(2).unwrap()).text;
    let s = parse(ChemlmFormat::Cif, &cif);
    unsafe {
        let mut v = ptr::null_mut();
        let p = CString::new(vpath.to_str().unwrap()).unwrap();
        assert_eq!(chemlm_vocab_load(p.as_ptr(), &mut v), ChemlmStatus::Ok);

        let mut len = 0;
        assert_eq!(chemlm_encode(v, s, ptr::null_mut(), 0, &mut len), ChemlmStatus::BufferTooSmall);
        let mut ids = vec![0u32; len];
        assert_eq!(chemlm_encode(v, s, ids.as_mut_ptr(), ids.len(), &mut len), ChemlmStatus::Ok);
        assert_eq!(len, 2 + 4 * 5 + 6);
        let mut back = ptr::null_mut();
        assert_eq!(chemlm_decode(v, ids.as_ptr(), len, &mut back), ChemlmStatus::Ok);
        let (mut a, mut b) = (ptr::null_mut(), ptr::null_mut());
        chemlm_structure_write(s, 2, &mut a);
        chemlm_structure_write(back, 2, &mut b);
        assert_eq!(CStr::from_ptr(a), CStr::from_ptr(b));
        chemlm_string_free(a);
        chemlm_string_free(b);
        assert_eq!(chemlm_decode(v, ids.as_ptr(), len - 1, &mut back), ChemlmStatus::Decode);

        let mut m = ptr::null_mut();
        let p = CString::new(mpath.to_str().unwrap()).unwrap();
        assert_eq!(chemlm_model_load(p.as_ptr(), &mut m), ChemlmStatus::Ok);
        let draw = |seed| {
            let mut out = ptr::null_mut();
            assert_eq!(chemlm_sample(m, v, 5, 1.0, seed, &mut out), ChemlmStatus::Ok);
            let mut n = 0;
            chemlm_samples_count(out, &mut n);
            let mut all = Vec::new();
            for i in 0..n {
                let mut buf = vec![0u32; 64];
                let mut len = 0;
                let mut truncated = false;
                assert_eq!(chemlm_samples_get(out, i, buf.as_mut_ptr(), 64, &mut len, &mut truncated), ChemlmStatus::Ok);
                buf.truncate(len);
                all.push(buf);
            }
            assert_eq!(chemlm_samples_get(out, n, ptr::null_mut(), 0, &mut 0, ptr::null_mut()), ChemlmStatus::InvalidArgument);
            chemlm_samples_free(out);
            all
        };
        let first = draw(3);
        assert_eq!(first.len(), 5);
        assert_eq!(first, draw(3));
        let mut out = ptr::null_mut();
        assert_eq!(chemlm_sample(m, v, 0, 1.0, 0, &mut out), ChemlmStatus::Model);

        chemlm_model_free(m);
        chemlm_vocab_free(v);
        chemlm_structure_free(back);
        chemlm_structure_free(s);
    }
}
