use std::io::Write;

use intentkb::embedding::{load_embeddings, phrase_vector, VectorSource};

fn write_fixture(rows: usize, dim: usize) -> tempfile::NamedTempFile {
    let mut f = tempfile::NamedTempFile::new().unwrap();
    let mut w = std::io::BufWriter::new(&mut f);
    writeln!(w, "{rows} {dim}").unwrap();
    for i in 0..rows {
        write!(w, "tok{i}").unwrap();
        for j in 0..dim {
            write!(w, " {}", ((i * 31 + j * 7) % 97) as f64 / 97.0 - 0.5).unwrap();
        }
        writeln!(w).unwrap();
    }
    drop(w);
    f
}

#[test]
fn fifty_thousand_rows_load_with_exact_size() {
    let rows = 50_000;
    let f = write_fixture(rows, 20);
    let text = std::fs::read_to_string(f.path()).unwrap();
    // wc-style count of data rows
    assert_eq!(text.lines().count() - 1, rows);

    let vocab = load_embeddings(f.path()).unwrap();
    assert_eq!(vocab.len(), rows);
    assert_eq!(vocab.dimension(), 20);
    assert_eq!(vocab.duplicates(), 0);
    let v = vocab.get("tok12345").unwrap();
    assert_eq!(v[3], ((12345 * 31 + 21) % 97) as f64 / 97.0 - 0.5);
}

#[test]
fn loading_twice_gives_the_same_vocabulary() {
    let f = write_fixture(500, 8);
    let a = load_embeddings(f.path()).unwrap();
    let b = load_embeddings(f.path()).unwrap();
    assert_eq!(a, b);
    let p = phrase_vector(&a, "tok1 tok2 unknown").unwrap();
    assert_eq!(p.source, VectorSource::TermCentroid);
    assert_eq!(p.covered_terms, 2);
    assert_eq!(p, phrase_vector(&b, "tok1 tok2 unknown").unwrap());
}

#[test]
fn fixture_embeddings_cover_most_refiners() {
    let dir = std::path::PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures/corpus");
    let vocab = load_embeddings(dir.join("embeddings.txt")).unwrap();
    assert_eq!(vocab.dimension(), 20);
    assert!(phrase_vector(&vocab, "check in").unwrap().source == VectorSource::DirectLookup);
    assert!(phrase_vector(&vocab, "zagat").is_none());
}
