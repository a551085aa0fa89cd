//! Drive the command-line front end from code: write a problem document,
//! then validate, verify, iterate and search it.

use polycert::cli::run;

const DOC: &str = r#"
format = "polycert/1"
kind = "polynomial"

[space]
type = "finite"
points = ["a", "b", "c"]
dist = [[0, 1, 3], [1, 0, 2], [3, 2, 0]]

[map]
table = { a = "a", b = "a", c = "b" }

[family]
a0 = 0
a1 = 1

[certificate]
lambda = "1/2"
j = 1
a_j = 1
"#;

fn main() {
    let path = std::env::temp_dir().join("polycert-example.toml");
    std::fs::write(&path, DOC).unwrap();
    let p = path.to_str().unwrap();
    for args in [
        vec!["validate", p],
        vec!["verify", p],
        vec!["iterate", p, "--start", "c", "--bound-check"],
        vec!["search", p, "--mode", "constant"],
    ] {
        let out = run(std::iter::once("polycert").chain(args.iter().copied()));
        println!("$ polycert {}\n{}", args.join(" "), out.stdout);
    }
}
