//! TSV reports.

use std::collections::BTreeSet;
use std::fmt::Write;

use idbadge_core::{IdentificationId, Ledger, QualityBadge, SourceType};

/// Photos per photo stage and identifications per identification stage,
/// split by origin. One row per stage in stage order.
pub fn badge_report(ledger: &Ledger) -> String {
    let mut rows = [(0usize, 0usize, 0usize); 4];
    for assignment in ledger.badges().values() {
        rows[assignment.stage.stage_rank() as usize].0 += 1;
        for (id, badge) in &assignment.per_identification {
            let row = &mut rows[badge.stage.stage_rank() as usize];
            match ledger.graph().identification(id) {
                Some(idn) if idn.origin.is_pre_identified() => row.1 += 1,
                Some(_) => row.2 += 1,
                None => {}
            }
        }
    }
    let mut out = String::from("badge\tphotos\tpre_identified_ids\tpost_identified_ids\n");
    for (badge, (photos, pre, post)) in QualityBadge::ALL.iter().zip(rows) {
        writeln!(out, "{}\t{photos}\t{pre}\t{post}", badge.label()).unwrap();
    }
    out
}

#[derive(Default, Clone, Copy)]
struct Counts {
    ids: usize,
    with_details: usize,
    with_urls: usize,
}

/// Identifications citing each source type through direct sources, split by
/// origin and by whether any such source has details or a URL. Rows follow
/// the taxonomy order, then `Blank` for unspecified sources, then the column
/// totals.
pub fn source_report(ledger: &Ledger) -> String {
    let graph = ledger.graph();
    let mut out = String::from(
        "source_type\tcategory\tpre_ids\tpre_with_details\tpre_with_urls\tpost_ids\tpost_with_details\tpost_with_urls\n",
    );
    let mut total = [Counts::default(); 2];
    let mut types: Vec<SourceType> = SourceType::ALL.iter().copied().filter(|t| *t != SourceType::Unspecified).collect();
    types.push(SourceType::Unspecified);
    for st in types {
        let mut row = [Counts::default(); 2];
        let citing: BTreeSet<&IdentificationId> = graph
            .identifications()
            .filter(|i| graph.direct_sources(&i.identification_id).any(|s| s.claim.source_type == st))
            .map(|i| &i.identification_id)
            .collect();
        for id in citing {
            let Some(idn) = graph.identification(id) else { continue };
            let claims: Vec<_> =
                graph.direct_sources(id).filter(|s| s.claim.source_type == st).map(|s| &s.claim).collect();
            let c = &mut row[usize::from(!idn.origin.is_pre_identified())];
            c.ids += 1;
            c.with_details += usize::from(claims.iter().any(|c| c.has_details()));
            c.with_urls += usize::from(claims.iter().any(|c| c.has_url()));
        }
        for (t, r) in total.iter_mut().zip(row) {
            t.ids += r.ids;
            t.with_details += r.with_details;
            t.with_urls += r.with_urls;
        }
        let label = if st == SourceType::Unspecified { "Blank" } else { st.label() };
        push_row(&mut out, label, st.category().label(), row);
    }
    push_row(&mut out, "Total", "", total);
    out
}

fn push_row(out: &mut String, label: &str, category: &str, [pre, post]: [Counts; 2]) {
    writeln!(
        out,
        "{label}\t{category}\t{}\t{}\t{}\t{}\t{}\t{}",
        pre.ids, pre.with_details, pre.with_urls, post.ids, post.with_details, post.with_urls
    )
    .unwrap();
}
