//! Exercises the C ABI from Rust: handle lifecycles, status codes, the
//! thread-local error message, and agreement with the core library.

use std::collections::BTreeMap;
use std::ffi::{CStr, CString};
use std::ptr;

use qfusion::circuit::{self, channel_of, CircuitBuilder};
use qfusion::distill::{greedy_nesting, threshold_scan, xdetect_map, zdetect_map, NoiseModel};
use qfusion::gates::GateName;
use qfusion_ffi::*;

fn circuit_json() -> CString {
    let mut b = CircuitBuilder::new();
    b.input("q0", 2).input("q1", 2);
    b.gate(GateName::H, &["q0"]);
    b.gate(GateName::T, &["q0"]);
    b.gate(GateName::Cs, &["q0", "q1"]);
    b.outputs(&["q0", "q1"]);
    CString::new(circuit::serialize(&b.build().unwrap())).unwrap()
}

fn last_error() -> String {
    let p = qf_last_error();
    assert!(!p.is_null(), "no error message recorded");
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_string()
}

unsafe fn take_string(text: *mut libc::c_char) -> String {
    assert!(!text.is_null());
    let owned = CStr::from_ptr(text).to_str().unwrap().to_string();
    qf_string_free(text);
    owned
}

#[test]
fn version_is_a_static_string() {
    let v = unsafe { CStr::from_ptr(qf_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn parse_roundtrips_through_the_handle() {
    let json = circuit_json();
    let mut handle: *mut QfCircuit = ptr::null_mut();
    unsafe {
        assert_eq!(qf_circuit_parse(json.as_ptr(), &mut handle), QfStatus::Ok);
        let mut wires = 0u64;
        assert_eq!(qf_circuit_wire_count(handle, &mut wires), QfStatus::Ok);
        assert_eq!(wires, 2);

        let mut text: *mut libc::c_char = ptr::null_mut();
        assert_eq!(qf_circuit_to_json(handle, &mut text), QfStatus::Ok);
        let round = take_string(text);
        assert_eq!(
            circuit::parse(&round).unwrap(),
            circuit::parse(json.to_str().unwrap()).unwrap()
        );
        qf_circuit_free(handle);
    }
}

#[test]
fn null_arguments_report_null_pointer() {
    let mut handle: *mut QfCircuit = ptr::null_mut();
    let status = unsafe { qf_circuit_parse(ptr::null(), &mut handle) };
    assert_eq!(status, QfStatus::NullPointer);
    assert!(last_error().contains("null"));
    unsafe {
        qf_circuit_free(ptr::null_mut());
        qf_string_free(ptr::null_mut());
    }
}

#[test]
fn malformed_json_reports_parse_error() {
    let bad = CString::new("{ not json").unwrap();
    let mut handle: *mut QfCircuit = ptr::null_mut();
    let status = unsafe { qf_circuit_parse(bad.as_ptr(), &mut handle) };
    assert_eq!(status, QfStatus::ParseError);
    assert!(last_error().contains("JSON"));
    assert!(handle.is_null());
}

#[test]
fn invalid_utf8_is_rejected() {
    let bytes: [u8; 3] = [0xff, 0xfe, 0x00];
    let mut handle: *mut QfCircuit = ptr::null_mut();
    let status =
        unsafe { qf_circuit_parse(bytes.as_ptr() as *const libc::c_char, &mut handle) };
    assert_eq!(status, QfStatus::InvalidUtf8);
}

#[test]
fn resources_and_recompile_match_the_core() {
    let json = circuit_json();
    let mut handle: *mut QfCircuit = ptr::null_mut();
    unsafe {
        assert_eq!(qf_circuit_parse(json.as_ptr(), &mut handle), QfStatus::Ok);

        let mut report = QfResourceReport {
            t_count: 0,
            cs_count: 0,
            toffoli_count: 0,
            f_states_used: 0,
            t_states_equivalent: 0,
            gadget_depth: 0,
        };
        assert_eq!(qf_circuit_resources(handle, &mut report), QfStatus::Ok);
        assert_eq!(
            report,
            QfResourceReport {
                t_count: 1,
                cs_count: 1,
                toffoli_count: 0,
                f_states_used: 3,
                t_states_equivalent: 4,
                gadget_depth: 2,
            }
        );

        let mut compiled: *mut QfCircuit = ptr::null_mut();
        assert_eq!(qf_circuit_recompile(handle, &mut compiled), QfStatus::Ok);
        let mut text: *mut libc::c_char = ptr::null_mut();
        assert_eq!(qf_circuit_to_json(compiled, &mut text), QfStatus::Ok);
        let out = circuit::parse(&take_string(text)).unwrap();
        let original = circuit::parse(json.to_str().unwrap()).unwrap();

        assert!(out.ops.iter().all(|op| !matches!(
            op,
            circuit::Op::Gate {
                name: GateName::T | GateName::Cs | GateName::Ccx,
                ..
            }
        )));
        let want = channel_of(&original, &BTreeMap::new()).unwrap();
        let got = channel_of(&out, &BTreeMap::new()).unwrap();
        assert!(want.total.max_abs_diff(&got.total) <= 1e-9);

        qf_circuit_free(compiled);
        qf_circuit_free(handle);
    }
}

#[test]
fn resources_reject_qudit_circuits() {
    let mut b = CircuitBuilder::new();
    b.input("d", 4);
    b.gate(GateName::H, &["d"]);
    b.outputs(&["d"]);
    let json = CString::new(circuit::serialize(&b.build().unwrap())).unwrap();
    let mut handle: *mut QfCircuit = ptr::null_mut();
    unsafe {
        assert_eq!(qf_circuit_parse(json.as_ptr(), &mut handle), QfStatus::Ok);
        let mut report = QfResourceReport {
            t_count: 0,
            cs_count: 0,
            toffoli_count: 0,
            f_states_used: 0,
            t_states_equivalent: 0,
            gadget_depth: 0,
        };
        assert_eq!(
            qf_circuit_resources(handle, &mut report),
            QfStatus::TranspileError
        );
        assert!(last_error().contains("dimension"));
        qf_circuit_free(handle);
    }
}

#[test]
fn sampling_is_seed_deterministic() {
    let mut b = CircuitBuilder::new();
    b.prep("q", 2, 0);
    b.gate(GateName::H, &["q"]);
    b.measure("q", "m");
    b.classical_outputs(&["m"]);
    let json = CString::new(circuit::serialize(&b.build().unwrap())).unwrap();
    let mut handle: *mut QfCircuit = ptr::null_mut();
    unsafe {
        assert_eq!(qf_circuit_parse(json.as_ptr(), &mut handle), QfStatus::Ok);
        let mut first: *mut libc::c_char = ptr::null_mut();
        let mut second: *mut libc::c_char = ptr::null_mut();
        assert_eq!(qf_circuit_sample(handle, 500, 11, &mut first), QfStatus::Ok);
        assert_eq!(qf_circuit_sample(handle, 500, 11, &mut second), QfStatus::Ok);
        let a = take_string(first);
        let b2 = take_string(second);
        assert_eq!(a, b2);
        let total: u64 = a
            .lines()
            .map(|row| row.rsplit(',').next().unwrap().parse::<u64>().unwrap())
            .sum();
        assert_eq!(total, 500);
        qf_circuit_free(handle);
    }
}

#[test]
fn identity_registry_passes_through_the_abi() {
    let mut summary = QfVerifySummary {
        total: 0,
        failed: 0,
        max_deviation: f64::NAN,
    };
    unsafe {
        assert_eq!(qf_verify_identities(ptr::null(), &mut summary), QfStatus::Ok);
    }
    assert!(summary.total >= 45);
    assert_eq!(summary.failed, 0);
    assert!(summary.max_deviation <= 1e-9);

    let prefix = CString::new("eq3").unwrap();
    unsafe {
        assert_eq!(
            qf_verify_identities(prefix.as_ptr(), &mut summary),
            QfStatus::Ok
        );
    }
    assert_eq!(summary.total, 8);
    assert_eq!(summary.failed, 0);
}

#[test]
fn block_maps_agree_with_the_core() {
    let d = NoiseModel::new(0.1).unwrap().distribution();
    let c_dist = QfErrorDistribution {
        p_i: d.p_i,
        p_x: d.p_x,
        p_z: d.p_z,
        p_xz: d.p_xz,
    };
    let mut got = QfBlockResult {
        accept_probability: 0.0,
        has_output: false,
        output: QfErrorDistribution {
            p_i: 0.0,
            p_x: 0.0,
            p_z: 0.0,
            p_xz: 0.0,
        },
    };

    unsafe {
        assert_eq!(qf_xdetect(&c_dist, &c_dist, &mut got), QfStatus::Ok);
    }
    let want = xdetect_map(&d, &d);
    assert_eq!(got.accept_probability, want.accept_probability);
    assert!(got.has_output);
    assert_eq!(got.output.p_z, want.output.unwrap().p_z);

    let inputs = [c_dist; 7];
    unsafe {
        assert_eq!(qf_zdetect(inputs.as_ptr(), &mut got), QfStatus::Ok);
    }
    let want = zdetect_map(&[d; 7]);
    assert_eq!(got.accept_probability, want.accept_probability);
    assert_eq!(got.output.p_x, want.output.unwrap().p_x);

    let negative = QfErrorDistribution {
        p_i: 1.2,
        p_x: -0.2,
        p_z: 0.0,
        p_xz: 0.0,
    };
    let status = unsafe { qf_xdetect(&negative, &c_dist, &mut got) };
    assert_eq!(status, QfStatus::InvalidArgument);
}

#[test]
fn nesting_threshold_and_ratio_agree_with_the_core() {
    let mut summary = QfNestingSummary {
        rounds: 0,
        converged: false,
        diverged: false,
        raw_per_output: 0.0,
        final_distribution: QfErrorDistribution {
            p_i: 0.0,
            p_x: 0.0,
            p_z: 0.0,
            p_xz: 0.0,
        },
    };
    unsafe {
        assert_eq!(qf_greedy_nesting(0.10, 400, 1e-12, &mut summary), QfStatus::Ok);
    }
    let want = greedy_nesting(&NoiseModel::new(0.10).unwrap(), 400, 1e-12);
    assert!(summary.converged);
    assert!(!summary.diverged);
    assert_eq!(summary.rounds, want.rounds.len() as u64);
    assert_eq!(summary.raw_per_output, want.raw_per_output);

    let status = unsafe { qf_greedy_nesting(1.5, 400, 1e-12, &mut summary) };
    assert_eq!(status, QfStatus::InvalidArgument);

    let mut t = 0.0f64;
    unsafe {
        assert_eq!(qf_threshold_scan(0.01, 0.40, 1e-3, &mut t), QfStatus::Ok);
    }
    assert_eq!(t, threshold_scan(0.01, 0.40, 1e-3).unwrap());

    let status = unsafe { qf_threshold_scan(0.30, 0.40, 1e-3, &mut t) };
    assert_eq!(status, QfStatus::InvalidArgument);
    assert!(last_error().contains("bracket"));

    let mut ratio = 0.0f64;
    let mut pair = 0.0f64;
    unsafe {
        assert_eq!(qf_cost_ratio(&mut ratio, &mut pair), QfStatus::Ok);
    }
    assert!((ratio - 6.83).abs() <= 0.01);
    assert_eq!(pair, 14.0);
}

#[test]
fn zdetect_validates_every_slot() {
    let good = QfErrorDistribution {
        p_i: 1.0,
        p_x: 0.0,
        p_z: 0.0,
        p_xz: 0.0,
    };
    let mut inputs = [good; 7];
    inputs[6].p_i = 0.5;
    let mut got = QfBlockResult {
        accept_probability: 0.0,
        has_output: false,
        output: good,
    };
    let status = unsafe { qf_zdetect(inputs.as_ptr(), &mut got) };
    assert_eq!(status, QfStatus::InvalidArgument);
    assert!(last_error().contains("sum"));
}

#[test]
fn header_declares_the_public_surface() {
    let header = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/include/qfusion.h"
    ))
    .expect("generated header exists");
    for needle in [
        "typedef struct QfCircuit QfCircuit;",
        "QF_STATUS_OK",
        "QF_STATUS_NULL_POINTER",
        "qf_circuit_parse",
        "qf_circuit_recompile",
        "qf_zdetect",
        "qf_threshold_scan",
        "qf_last_error",
        "qf_string_free",
    ] {
        assert!(header.contains(needle), "header lacks {needle:?}");
    }
}
