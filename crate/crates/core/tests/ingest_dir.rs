use std::fs;
use std::path::Path;

use oarima::ingest::{list_batch_files, load_batch_dir, BatchFileFormat};
use oarima::Error;

fn write(dir: &Path, name: &str, rows: &[[f64; 2]]) {
    let text: String = rows.iter().map(|r| format!("{}\t{}\n", r[0], r[1])).collect();
    fs::write(dir.join(name), text).unwrap();
}

#[test]
fn files_load_in_name_order_up_to_limit() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "b", &[[2.0, 20.0], [2.5, 25.0]]);
    write(dir.path(), "a", &[[1.0, 10.0], [1.5, 15.0]]);
    write(dir.path(), "c", &[[3.0, 30.0], [3.5, 35.0]]);
    fs::write(dir.path().join(".hidden"), "not data\n").unwrap();

    let names: Vec<_> = list_batch_files(dir.path())
        .unwrap()
        .iter()
        .map(|p| p.file_name().unwrap().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, ["a", "b", "c"]);

    let batches = load_batch_dir(dir.path(), BatchFileFormat::BearingSnapshot, 1, Some(2)).unwrap();
    assert_eq!(batches.len(), 2);
    assert_eq!(batches[0].values(), &[10.0, 15.0]);
    assert_eq!(batches[1].values(), &[20.0, 25.0]);
    assert_eq!((batches[0].batch_index, batches[1].batch_index), (0, 1));
}

#[test]
fn zero_limit_and_empty_directory_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        load_batch_dir(dir.path(), BatchFileFormat::BearingSnapshot, 0, None),
        Err(Error::EmptySelection(_))
    ));
    write(dir.path(), "a", &[[1.0, 1.0]]);
    assert!(matches!(
        load_batch_dir(dir.path(), BatchFileFormat::BearingSnapshot, 0, Some(0)),
        Err(Error::EmptySelection(_))
    ));
}

#[test]
fn fifty_files_keep_their_order() {
    let dir = tempfile::tempdir().unwrap();
    for i in (0..50).rev() {
        write(dir.path(), &format!("snap_{i:03}"), &[[i as f64, 0.0], [i as f64 + 0.5, 0.0]]);
    }
    let batches = load_batch_dir(dir.path(), BatchFileFormat::BearingSnapshot, 0, None).unwrap();
    assert_eq!(batches.len(), 50);
    for (i, b) in batches.iter().enumerate() {
        assert_eq!(b.batch_index, i);
        assert_eq!(b.values()[0], i as f64);
    }
}

#[test]
fn malformed_row_names_file_and_row() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a", &[[1.0, 1.0]; 3]);
    let mut text: String = (0..6).map(|i| format!("{i}\t0.0\n")).collect();
    text.push_str("0.1\tgarbage\n");
    fs::write(dir.path().join("b"), text).unwrap();

    let err = load_batch_dir(dir.path(), BatchFileFormat::BearingSnapshot, 0, None).unwrap_err();
    match &err {
        Error::Parse { path, row, .. } => {
            assert_eq!(path.file_name().unwrap(), "b");
            assert_eq!(*row, 7);
        }
        other => panic!("unexpected error {other:?}"),
    }
}

#[test]
fn channel_beyond_columns_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a", &[[1.0, 1.0]]);
    assert!(matches!(
        load_batch_dir(dir.path(), BatchFileFormat::BearingSnapshot, 2, None),
        Err(Error::ChannelOutOfRange { channel: 2, columns: 2, .. })
    ));
}
