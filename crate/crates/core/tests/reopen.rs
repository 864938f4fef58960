use std::fs;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use slsm::{Engine, EngineOptions, Error, TuningParams};

fn params() -> TuningParams {
    TuningParams {
        runs: 4,
        run_capacity: 32,
        epsilon: 0.01,
        disk_runs: 3,
        merge_fraction: 1.0,
        fence_page: 8,
    }
}

#[test]
fn reopen_reproduces_reads() {
    let dir = tempfile::tempdir().unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut e = Engine::open(dir.path(), params(), EngineOptions::default()).unwrap();
    for _ in 0..5000 {
        let k = rng.random_range(0..3000);
        if rng.random_bool(0.1) {
            e.delete(k).unwrap();
        } else {
            e.put(k, rng.random()).unwrap();
        }
    }
    let gets: Vec<_> = (0..3000).map(|k| e.get(k).unwrap()).collect();
    let all = e.range(i32::MIN, i32::MAX).unwrap();
    e.close().unwrap();

    let e = Engine::open(dir.path(), params(), EngineOptions::default()).unwrap();
    assert!(e.buffer().is_empty());
    assert_eq!((0..3000).map(|k| e.get(k).unwrap()).collect::<Vec<_>>(), gets);
    assert_eq!(e.range(i32::MIN, i32::MAX).unwrap(), all);
}

#[test]
fn reopen_continues_writing() {
    let dir = tempfile::tempdir().unwrap();
    let mut e = Engine::open(dir.path(), params(), EngineOptions::default()).unwrap();
    for k in 0..1000 {
        e.put(k, 1).unwrap();
    }
    e.close().unwrap();
    let mut e = Engine::open(dir.path(), params(), EngineOptions::default()).unwrap();
    for k in 500..1500 {
        e.put(k, 2).unwrap();
    }
    e.close().unwrap();
    let e = Engine::open(dir.path(), params(), EngineOptions::default()).unwrap();
    assert_eq!(e.get(10).unwrap(), Some(1));
    assert_eq!(e.get(700).unwrap(), Some(2));
    assert_eq!(e.get(1499).unwrap(), Some(2));
    assert_eq!(e.range(0, 2000).unwrap().len(), 1500);
}

#[test]
fn manifest_count_mismatch_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let mut e = Engine::open(dir.path(), params(), EngineOptions::default()).unwrap();
    for k in 0..300 {
        e.put(k, k).unwrap();
    }
    e.close().unwrap();
    let path = dir.path().join("manifest.txt");
    let text = fs::read_to_string(&path).unwrap();
    let first = text.lines().next().unwrap();
    let (head, count) = first.rsplit_once(',').unwrap();
    let bad = format!("{head},{}", count.parse::<usize>().unwrap() + 1);
    fs::write(&path, text.replacen(first, &bad, 1)).unwrap();
    assert!(matches!(
        Engine::open(dir.path(), params(), EngineOptions::default()),
        Err(Error::Corrupt { .. })
    ));
}

#[test]
fn missing_run_file_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut e = Engine::open(dir.path(), params(), EngineOptions::default()).unwrap();
    for k in 0..300 {
        e.put(k, k).unwrap();
    }
    let victim = e.run_files().unwrap().remove(0);
    e.close().unwrap();
    fs::remove_file(victim).unwrap();
    assert!(matches!(
        Engine::open(dir.path(), params(), EngineOptions::default()),
        Err(Error::Io { .. })
    ));
}
