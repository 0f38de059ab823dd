use std::ffi::{c_char, CStr, CString};
use std::ptr;

use lisec::messages::{encode_dao, DaoModified};
use lisec::puf_auth::License;
use lisec::{Address, NodeId};
use lisec_ffi::*;

fn last_error() -> String {
    let mut buf = [0 as c_char; 256];
    unsafe { lisec_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn c(s: &str) -> CString {
    CString::new(s).unwrap()
}

#[test]
fn license_round_trip() {
    let mut l = 0;
    assert_eq!(unsafe { lisec_generate_license(0b1010_1100, 0b0110_1001, 8, &mut l) }, LISEC_OK);
    assert_eq!(l, 0b1100_0101);
    let mut r = 0;
    assert_eq!(unsafe { lisec_recover_response(0b1010_1100, l, 8, &mut r) }, LISEC_OK);
    assert_eq!(r, 0b0110_1001);

    assert_eq!(unsafe { lisec_generate_license(0x1ff, 0, 8, &mut l) }, LISEC_ERR_INVALID);
    assert!(last_error().contains("8 bits"), "{}", last_error());
    assert_eq!(unsafe { lisec_generate_license(1, 1, 12, &mut l) }, LISEC_ERR_INVALID);
    assert_eq!(unsafe { lisec_generate_license(1, 1, 8, ptr::null_mut()) }, LISEC_ERR_NULL);
    assert_eq!(last_error(), "license_out is null");
}

#[test]
fn database_registers_and_verifies() {
    let mut db = ptr::null_mut();
    assert_eq!(unsafe { lisec_db_new(2, 8, &mut db) }, LISEC_OK);
    let secret = [7u8; LISEC_SECRET_LEN];
    let (mut ch, mut lic) = (0, 0);
    assert_eq!(unsafe { lisec_db_register_keyed(db, 2, secret.as_ptr(), 11, &mut ch, &mut lic) }, LISEC_OK);
    assert_eq!(unsafe { lisec_db_len(db) }, 1);

    let mut ok = false;
    assert_eq!(unsafe { lisec_db_verify(db, 2, lic, &mut ok) }, LISEC_OK);
    assert!(ok);
    assert_eq!(unsafe { lisec_db_verify(db, 2, lic ^ 1, &mut ok) }, LISEC_OK);
    assert!(!ok);
    assert_eq!(unsafe { lisec_db_verify(db, 9, lic, &mut ok) }, LISEC_OK);
    assert!(!ok, "unknown node");

    assert_eq!(unsafe { lisec_db_register_keyed(db, 2, secret.as_ptr(), 12, &mut ch, &mut lic) }, LISEC_ERR_DUPLICATE);
    assert_eq!(unsafe { lisec_db_insert(db, 3, 0x5a, 0x0f) }, LISEC_OK);
    assert_eq!(unsafe { lisec_db_verify(db, 3, 0x55, &mut ok) }, LISEC_OK);
    assert!(ok);
    assert_eq!(unsafe { lisec_db_insert(db, 4, 1, 1) }, LISEC_ERR_CAPACITY);
    assert!(last_error().contains("capacity 2"));

    unsafe { lisec_db_free(db) };
    unsafe { lisec_db_free(ptr::null_mut()) };
}

#[test]
fn dao_encoding_matches_the_library() {
    let src = Address::of_node(NodeId(4));
    let target = Address::forged(0x0102_0304);
    let expected = encode_dao(&DaoModified::plain(src, target, 9, License::from_u8(0xc0))).unwrap();

    let mut buf = [0u8; 64];
    let mut n = 0;
    let st = unsafe {
        lisec_dao_encode(
            src.0.as_ptr(),
            target.0.as_ptr(),
            9,
            0xc0,
            ptr::null(),
            0,
            buf.as_mut_ptr(),
            buf.len(),
            &mut n,
        )
    };
    assert_eq!(st, LISEC_OK);
    assert_eq!(&buf[..n], &expected[..]);
    assert_eq!(n, 36);

    let mut small = [0u8; 10];
    let st = unsafe {
        lisec_dao_encode(src.0.as_ptr(), target.0.as_ptr(), 9, 0xc0, ptr::null(), 0, small.as_mut_ptr(), 10, &mut n)
    };
    assert_eq!(st, LISEC_ERR_BUFFER_TOO_SMALL);
    assert_eq!(n, 36);
    assert_eq!(small, [0; 10]);

    let opts = [0xaa, 0xbb, 0xcc];
    let st = unsafe {
        lisec_dao_encode(src.0.as_ptr(), target.0.as_ptr(), 1, 0, opts.as_ptr(), 3, buf.as_mut_ptr(), buf.len(), &mut n)
    };
    assert_eq!(st, LISEC_OK);
    let mut dao = LisecDao::default();
    let mut got = [0u8; 8];
    assert_eq!(unsafe { lisec_dao_decode(buf.as_ptr(), n, &mut dao, got.as_mut_ptr(), got.len()) }, LISEC_OK);
    assert_eq!((dao.src, dao.target, dao.sequence, dao.options_len), (src.0, target.0, 1, 3));
    assert_eq!(&got[..3], &opts);
    assert_eq!(unsafe { lisec_dao_decode(buf.as_ptr(), n, &mut dao, ptr::null_mut(), 0) }, LISEC_ERR_BUFFER_TOO_SMALL);
    assert_eq!(unsafe { lisec_dao_decode(buf.as_ptr(), 20, &mut dao, ptr::null_mut(), 0) }, LISEC_ERR_DECODE);
}

#[test]
fn scenario_run_reports_metrics() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { lisec_scenario_new(&mut s) }, LISEC_OK);
    assert_eq!(unsafe { lisec_scenario_set(s, c("duration_s").as_ptr(), c("600").as_ptr()) }, LISEC_OK);
    assert_eq!(unsafe { lisec_scenario_set(s, c("warp").as_ptr(), c("9").as_ptr()) }, LISEC_ERR_INVALID);
    assert!(last_error().contains("warp"));

    let mut m = LisecRunMetrics::default();
    assert_eq!(unsafe { lisec_run(s, c("baseline").as_ptr(), 1, &mut m) }, LISEC_OK);
    assert_eq!(m.pdr, 1.0);
    assert!(m.sent > 0 && m.sent == m.received);
    assert!(m.apc_mw > 0.0545 && m.ae2ed_s > 0.0);
    assert_eq!((m.n_blacklist, m.forged_emitted), (0, 0));

    assert_eq!(unsafe { lisec_scenario_set(s, c("attackers").as_ptr(), c("1").as_ptr()) }, LISEC_OK);
    assert_eq!(unsafe { lisec_run(s, c("defense").as_ptr(), 1, &mut m) }, LISEC_OK);
    assert!(m.forged_emitted > 0);
    assert!(m.n_blacklist >= 1);
    assert_eq!(unsafe { lisec_run(s, c("chaos").as_ptr(), 1, &mut m) }, LISEC_ERR_INVALID);
    assert!(last_error().contains("chaos"));

    let dir = tempfile::tempdir().unwrap();
    assert_eq!(unsafe { lisec_scenario_set(s, c("seeds").as_ptr(), c("1,2").as_ptr()) }, LISEC_OK);
    assert_eq!(unsafe { lisec_scenario_set(s, c("arms").as_ptr(), c("attack").as_ptr()) }, LISEC_OK);
    let out = c(dir.path().to_str().unwrap());
    assert_eq!(unsafe { lisec_run_experiment(s, 0, out.as_ptr()) }, LISEC_OK);
    let runs = std::fs::read_to_string(dir.path().join("runs.csv")).unwrap();
    assert_eq!(runs.lines().count(), 3);
    unsafe { lisec_scenario_free(s) };
}

#[test]
fn scenario_file_errors_surface() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { lisec_scenario_load(c("/nonexistent/x.cfg").as_ptr(), &mut s) }, LISEC_ERR_INVALID);
    assert!(s.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { lisec_scenario_load(ptr::null(), &mut s) }, LISEC_ERR_NULL);

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s.cfg");
    std::fs::write(&path, "rt_cap = 8\n").unwrap();
    let p = c(path.to_str().unwrap());
    assert_eq!(unsafe { lisec_scenario_load(p.as_ptr(), &mut s) }, LISEC_OK);
    unsafe { lisec_scenario_free(s) };
}

#[test]
fn errors_are_per_thread_and_cleared_on_success() {
    let mut l = 0;
    assert_eq!(unsafe { lisec_generate_license(1, 1, 3, &mut l) }, LISEC_ERR_INVALID);
    assert!(!last_error().is_empty());
    std::thread::spawn(|| assert_eq!(last_error(), "")).join().unwrap();
    assert_eq!(unsafe { lisec_generate_license(1, 1, 8, &mut l) }, LISEC_OK);
    assert_eq!(last_error(), "");
    // Truncation still reports the full length.
    assert_eq!(unsafe { lisec_generate_license(1, 1, 3, &mut l) }, LISEC_ERR_INVALID);
    let mut tiny = [0 as c_char; 4];
    let full = unsafe { lisec_last_error(tiny.as_mut_ptr(), tiny.len()) };
    assert!(full > 3);
    assert_eq!(unsafe { CStr::from_ptr(tiny.as_ptr()) }.to_bytes().len(), 3);
}

#[test]
fn sixteen_bit_database_and_version() {
    let mut db = ptr::null_mut();
    assert_eq!(unsafe { lisec_db_new(4, 16, &mut db) }, LISEC_OK);
    let mut ok = true;
    assert_eq!(unsafe { lisec_db_insert(db, 2, 0x1234, 0x00ff) }, LISEC_OK);
    assert_eq!(unsafe { lisec_db_verify(db, 2, 0x12cb, &mut ok) }, LISEC_OK);
    assert!(ok);
    unsafe { lisec_db_free(db) };
    assert_eq!(unsafe { CStr::from_ptr(lisec_version()) }.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
