use std::path::Path;

use mcreduce_core::ddmin::trace;

fn golden(name: &str) -> Vec<(Vec<char>, bool)> {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden").join(name);
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            let (set, verdict) = l.split_once(' ').unwrap();
            (set.split(',').map(|s| s.chars().next().unwrap()).collect(), verdict == "accept")
        })
        .collect()
}

fn letters(n: usize) -> Vec<char> {
    ('a'..).take(n).collect()
}

#[test]
fn four_all_reject() {
    assert_eq!(trace(letters(4), |_| false), golden("ddmin_4_all_reject.txt"));
}

#[test]
fn eight_all_reject() {
    let t = trace(letters(8), |_| false);
    assert_eq!(t.len(), 26);
    assert_eq!(t, golden("ddmin_8_all_reject.txt"));
}

#[test]
fn four_keep_c() {
    assert_eq!(trace(letters(4), |d| !d.contains(&'c')), golden("ddmin_4_keep_c.txt"));
}

#[test]
fn eight_keep_c_and_f() {
    assert_eq!(trace(letters(8), |d| !d.contains(&'c') && !d.contains(&'f')), golden("ddmin_8_keep_c_f.txt"));
}

#[test]
fn eight_complement_accept() {
    let t = trace(letters(8), |d| d == ['c', 'd', 'e', 'f', 'g', 'h'] || d == ['b']);
    assert_eq!(t, golden("ddmin_8_complement.txt"));
}
