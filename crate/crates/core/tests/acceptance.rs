//! Acceptance suite: one line per criterion, failing if any criterion fails.

use wedgetrace::acceptance::run_suite;

#[test]
fn acceptance_suite() {
    let results = run_suite();
    for r in &results {
        println!("{r}");
    }
    let failed: Vec<u32> = results.iter().filter(|r| !r.pass).map(|r| r.id).collect();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
