//! Records a few decisions in an append-only log, reopens it and replays
//! every decision against the loaded domains.

use repolicy::domain::{assignments, Action, AUDIT_DATASET};
use repolicy::packs;
use repolicy::store::{record_decision, replay_all, Store};

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let policy = packs::ferpa_only_policy();
    let ctx = policy.context(&packs::builtin_domains()).expect("context");
    let rows = assignments(ctx.domain("ferpa").expect("ferpa")).expect("assignments");
    let action = Action::release(&policy.id, AUDIT_DATASET, "researcher", "depositor");
    {
        let mut store = Store::open(dir.path()).expect("open");
        for (i, row) in rows.iter().step_by(16).enumerate() {
            let (record, verdict) = record_decision(&mut store, &format!("d{i}"), &policy, &ctx, &action, row.facts(), 9).expect("record");
            println!("{} {:<10} {}", record.id, verdict.verdict.label(), row);
        }
    }
    let store = Store::open(dir.path()).expect("reopen");
    println!("log has {} line(s)", store.lines().len());
    let resolve = |id: &str| (id == policy.id).then_some((&policy, &ctx));
    for r in replay_all(&store, &resolve).expect("replay") {
        println!("{} {}", r.id, if r.identical { "identical" } else { "DIFFERS" });
    }
}
