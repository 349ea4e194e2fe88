//! Reading and writing LIBSVM files, and what a bad line looks like.
//!
//! ```text
//! cargo run --release --example libsvm_io -- [file.svm]
//! ```

use std::fs::File;
use std::io::BufReader;

use datasplit::data::{parse_libsvm, parse_libsvm_str, write_libsvm, RidgeProblem};

fn main() -> datasplit::Result<()> {
    let data = match std::env::args().nth(1) {
        Some(path) => parse_libsvm(BufReader::new(File::open(path)?))?,
        None => parse_libsvm_str("# three samples\n1.5 1:0.5 3:2\n-0.25 2:1 # trailing comment\n\n2 1:1 2:1 3:1\n")?,
    };
    println!("{} samples, {} features", data.len(), data.dim);
    let mut text = Vec::new();
    write_libsvm(&data, &mut text)?;
    print!("canonical form:\n{}", String::from_utf8_lossy(&text));

    let problem = RidgeProblem::new(data, 0.1)?;
    let w = problem.solve_direct()?;
    println!("ridge solution: {:.4?}", w.as_slice());

    for bad in ["1 2:1 1:3", "x 1:1", "1 0:2", "1 3:nan"] {
        match parse_libsvm_str(&format!("1 1:1\n{bad}\n")) {
            Err(e) => println!("{bad:<10} -> {e}"),
            Ok(_) => println!("{bad:<10} -> accepted"),
        }
    }
    Ok(())
}
