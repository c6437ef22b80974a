//! Bundled sample programs and the synthetic training-corpus generator.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy)]
pub struct Sample {
    pub file: &'static str,
    pub label: &'static str,
    pub source: &'static str,
}

const APPENDIX: [Sample; 7] = [
    Sample {
        file: "alg1_brute_force.c",
        label: "Brute Force",
        source: include_str!("../corpus/appendix/alg1_brute_force.c"),
    },
    Sample {
        file: "alg2_dynamic_programming.c",
        label: "Dynamic Programming",
        source: include_str!("../corpus/appendix/alg2_dynamic_programming.c"),
    },
    Sample {
        file: "alg3_sorting.c",
        label: "Sorting",
        source: include_str!("../corpus/appendix/alg3_sorting.c"),
    },
    Sample {
        file: "alg4_arithmetic.c",
        label: "Arithmetic",
        source: include_str!("../corpus/appendix/alg4_arithmetic.c"),
    },
    Sample {
        file: "alg5_graph_theory.c",
        label: "Graph Theory",
        source: include_str!("../corpus/appendix/alg5_graph_theory.c"),
    },
    Sample {
        file: "alg6_computational_geometry.c",
        label: "Computational Geometry",
        source: include_str!("../corpus/appendix/alg6_computational_geometry.c"),
    },
    Sample {
        file: "alg7_string.c",
        label: "String",
        source: include_str!("../corpus/appendix/alg7_string.c"),
    },
];

/// One exemplar program per algorithm category.
pub fn appendix() -> &'static [Sample] {
    &APPENDIX
}

/// Directory holding the bundled appendix sources and `manifest.jsonl`.
pub fn appendix_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus").join("appendix")
}

/// A generated program with its class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generated {
    pub label: &'static str,
    pub source: String,
}

pub const SYNTHETIC_LABELS: [&str; 4] = ["Brute Force", "Dynamic Programming", "Sorting", "String"];

const NAMES: &[&str] = &[
    "a", "b", "c", "i", "j", "k", "m", "n", "p", "q", "t", "x", "y", "cnt", "idx", "len", "num", "sum", "tmp",
    "val", "res", "cur", "lo", "hi", "ans", "row", "col", "buf", "arr", "dp", "s", "w",
];

fn pick_names<const K: usize>(rng: &mut ChaCha8Rng) -> [&'static str; K] {
    let chosen: Vec<&str> = NAMES.choose_multiple(rng, K).copied().collect();
    let mut out = [""; K];
    out.copy_from_slice(&chosen);
    out
}

/// Nested counting loops printing a product table.
fn brute_force(rng: &mut ChaCha8Rng) -> String {
    let [i, j] = pick_names::<2>(rng);
    let lo1 = rng.gen_range(0..3);
    let hi1 = rng.gen_range(5..20);
    let lo2 = rng.gen_range(0..3);
    let hi2 = rng.gen_range(5..20);
    let op = ["*", "+", "-"].choose(rng).unwrap();
    let fmt = ["%dx%d=%d\\n", "%d %d %d\\n", "%d*%d=%d "].choose(rng).unwrap();
    format!(
        "int main(){{\n    int {i}, {j};\n    for({i} = {lo1}; {i} < {hi1}; {i}++){{\n        \
         for({j} = {lo2}; {j} < {hi2}; {j}++){{\n            printf(\"{fmt}\", {i}, {j}, {i} {op} {j});\n        \
         }}\n    }}\n    return 0;\n}}\n"
    )
}

/// Table filled from a recurrence over earlier entries.
fn dynamic_programming(rng: &mut ChaCha8Rng) -> String {
    let [f, tbl, i, n] = pick_names::<4>(rng);
    let size = rng.gen_range(20..60);
    let seeds = rng.gen_range(2..4);
    let mut body = format!("int {f}(int {n})\n{{\n    int {tbl}[{size}];\n    int {i};\n");
    for s in 1..=seeds {
        body.push_str(&format!("    {tbl}[{s}] = {};\n", rng.gen_range(1..6)));
    }
    let terms: Vec<String> = (1..=seeds).map(|d| format!("{tbl}[{i} - {d}]")).collect();
    body.push_str(&format!(
        "    for ({i} = {}; {i} < {size}; {i}++)\n        {tbl}[{i}] = {};\n    return {tbl}[{n}];\n}}\n",
        seeds + 1,
        terms.join(" + ")
    ));
    body
}

/// Read numbers, sort them with `qsort`, then fold a strided sum.
fn sorting(rng: &mut ChaCha8Rng) -> String {
    let [cmp, x, y, n, arr, i, acc] = pick_names::<7>(rng);
    let cap = rng.gen_range(100..400);
    let mult = rng.gen_range(1..3);
    let (lhs, rhs) = if rng.gen_bool(0.5) { (x, y) } else { (y, x) };
    format!(
        "int {cmp}(const void *{x}, const void *{y})\n{{\n    return *(int *){lhs} - *(int *){rhs};\n}}\n\n\
         int main()\n{{\n    int {n}, {arr}[{cap}];\n    scanf(\"%d\", &{n});\n    \
         for (int {i} = 0; {i} < {mult} * {n}; {i}++) {{\n        scanf(\"%d\", &{arr}[{i}]);\n    }}\n    \
         qsort({arr}, {mult} * {n}, sizeof(int), {cmp});\n    int {acc} = 0;\n    \
         for (int {i} = 0; {i} < {n}; {i}++) {{\n        {acc} += {arr}[{mult} * {i}];\n    }}\n    \
         printf(\"%d\\n\", {acc});\n    return 0;\n}}\n"
    )
}

/// Read a string and print it backwards.
fn string_reverse(rng: &mut ChaCha8Rng) -> String {
    let [s, i, len] = pick_names::<3>(rng);
    let cap = rng.gen_range(20..200);
    let tail = if rng.gen_bool(0.5) { "    printf(\"\\n\");\n" } else { "" };
    format!(
        "int main(){{\n    char {s}[{cap}];\n    int {i}, {len};\n    scanf(\"%s\", {s});\n    \
         {len} = strlen({s});\n    for({i} = {len} - 1; {i} >= 0; {i}--){{\n        \
         printf(\"%c\", {s}[{i}]);\n    }}\n{tail}    return 0;\n}}\n"
    )
}

/// `count` programs cycling through the four template classes, with
/// randomized identifiers, constants and loop bounds. Deterministic in
/// `seed`.
pub fn synthetic(count: usize, seed: u64) -> Vec<Generated> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|k| {
            let class = k % SYNTHETIC_LABELS.len();
            let source = match class {
                0 => brute_force(&mut rng),
                1 => dynamic_programming(&mut rng),
                2 => sorting(&mut rng),
                _ => string_reverse(&mut rng),
            };
            Generated { label: SYNTHETIC_LABELS[class], source }
        })
        .collect()
}
