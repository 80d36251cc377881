use std::ffi::{CStr, CString};
use std::ptr;

use centrep_ffi::*;

fn last_error() -> String {
    let p = centrep_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn targeted_round_trip() {
    unsafe {
        let tag = CString::new("even-M").unwrap();
        let mut inst = ptr::null_mut();
        assert_eq!(centrep_instance_targeted(tag.as_ptr(), 7, 3, &mut inst), CentrepStatus::Ok);
        assert_eq!(centrep_instance_dim(inst), 7);

        let mut cert = ptr::null_mut();
        assert_eq!(centrep_witness_construct(inst, &mut cert), CentrepStatus::Ok);
        assert_eq!(CStr::from_ptr(centrep_certificate_case_tag(cert)).to_str().unwrap(), "even-M");
        let mut mask = 0u32;
        assert_eq!(centrep_certificate_verify(cert, inst, &mut mask), CentrepStatus::Ok);
        assert_eq!(mask, CENTREP_CHECK_A | CENTREP_CHECK_B | CENTREP_CHECK_C | CENTREP_CHECK_D);
        assert_eq!(centrep_oracle_check(inst, cert, 0), CentrepStatus::Ok);

        let mut json = ptr::null_mut();
        assert_eq!(centrep_instance_to_json(inst, &mut json), CentrepStatus::Ok);
        let mut again = ptr::null_mut();
        assert_eq!(centrep_instance_from_json(json, &mut again), CentrepStatus::Ok);
        assert_eq!(centrep_instance_dim(again), 7);
        centrep_string_free(json);

        let mut cj = ptr::null_mut();
        assert_eq!(centrep_certificate_to_json(cert, &mut cj), CentrepStatus::Ok);
        let v: serde_json::Value = serde_json::from_str(CStr::from_ptr(cj).to_str().unwrap()).unwrap();
        assert_eq!(v["case_tag"], "even-M");
        centrep_string_free(cj);

        // the certificate fails against a different instance
        let mut other = ptr::null_mut();
        assert_eq!(centrep_instance_generate(7, 11, &mut other), CentrepStatus::Ok);
        let mut mask = 0u32;
        let s = centrep_certificate_verify(cert, other, &mut mask);
        if s != CentrepStatus::Ok {
            assert_eq!(s, CentrepStatus::CheckFailed);
            assert!(last_error().contains("checks failed"));
        }

        centrep_certificate_free(cert);
        centrep_instance_free(inst);
        centrep_instance_free(again);
        centrep_instance_free(other);
    }
}

#[test]
fn error_codes() {
    unsafe {
        let mut inst = ptr::null_mut();
        assert_eq!(centrep_instance_generate(1, 1, &mut inst), CentrepStatus::InvalidInput);
        assert!(inst.is_null());

        let bad = CString::new("{\"dim\": 3").unwrap();
        assert_eq!(centrep_instance_from_json(bad.as_ptr(), &mut inst), CentrepStatus::InvalidInput);
        assert!(last_error().contains("instance JSON"));

        // Ω = e1∧e3 = θ(e2∧e3) with θ e2 = e1
        let img = CString::new(
            r#"{"dim":3,"theta":[["0","1","0"],["0","0","0"],["0","0","0"]],
            "omega":[{"i":1,"j":3,"c":"1"}],"epsilon":["0","0","1"],"seed":null,"spec_version":"1"}"#,
        )
        .unwrap();
        assert_eq!(centrep_instance_from_json(img.as_ptr(), &mut inst), CentrepStatus::Hypothesis);
        assert!(last_error().contains("image of theta"));

        let tag = CString::new("no-such-case").unwrap();
        assert_eq!(centrep_instance_targeted(tag.as_ptr(), 6, 1, &mut inst), CentrepStatus::InvalidInput);

        assert_eq!(centrep_instance_from_json(ptr::null(), &mut inst), CentrepStatus::NullPointer);
        assert_eq!(centrep_witness_construct(ptr::null(), ptr::null_mut()), CentrepStatus::NullPointer);
        assert_eq!(centrep_instance_dim(ptr::null()), 0);
        assert!(centrep_certificate_case_tag(ptr::null()).is_null());
        centrep_instance_free(ptr::null_mut());
        centrep_certificate_free(ptr::null_mut());
        centrep_string_free(ptr::null_mut());
    }
}

#[test]
fn betti_numbers() {
    unsafe {
        let h3 = CString::new(r#"{"dim":3,"brackets":[{"i":1,"j":2,"coeffs":{"3":"1"}}]}"#).unwrap();
        let mut b = [0usize; 8];
        let mut len = 0usize;
        assert_eq!(centrep_cohomology_betti(h3.as_ptr(), b.as_mut_ptr(), b.len(), &mut len), CentrepStatus::Ok);
        assert_eq!(&b[..len], &[1, 2, 2, 1]);

        let mut len = 0usize;
        assert_eq!(centrep_cohomology_betti(h3.as_ptr(), ptr::null_mut(), 0, &mut len), CentrepStatus::Ok);
        assert_eq!(len, 4);

        let bad = CString::new(
            r#"{"dim":3,"brackets":[{"i":1,"j":2,"coeffs":{"3":"1"}},{"i":1,"j":3,"coeffs":{"1":"1"}}]}"#,
        )
        .unwrap();
        assert_eq!(centrep_cohomology_betti(bad.as_ptr(), b.as_mut_ptr(), 8, &mut len), CentrepStatus::Hypothesis);
    }
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/centrep.h")).unwrap();
    for name in [
        "centrep_instance_from_json",
        "centrep_witness_construct",
        "centrep_certificate_verify",
        "centrep_cohomology_betti",
        "centrep_last_error",
        "CENTREP_STATUS_HYPOTHESIS",
        "typedef struct CentrepInstance CentrepInstance",
    ] {
        assert!(h.contains(name), "header lacks {name}");
    }
    assert!(!centrep_version().is_null());
}
