use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};

use mtp2skill_core::cq::{run_cq, CqId};
use mtp2skill_core::mapping::map_document;
use mtp2skill_core::rdf::Term;
use mtp2skill_core::{AmlDocument, RdfGraph, SkillConfig};

const MIXER: &str = include_str!("../../core/fixtures/mixer.aml");
const BASE: &str = "http://plant.example/mixer";

fn converted() -> RdfGraph {
    let doc = AmlDocument::parse(MIXER.as_bytes()).unwrap();
    map_document(&doc, BASE, &SkillConfig::default()).unwrap().graph
}

fn bench_parse(c: &mut Criterion) {
    c.bench_function("parse mixer.aml", |b| {
        b.iter(|| AmlDocument::parse(black_box(MIXER.as_bytes())).unwrap())
    });
}

fn bench_map(c: &mut Criterion) {
    let doc = AmlDocument::parse(MIXER.as_bytes()).unwrap();
    let config = SkillConfig::default();
    c.bench_function("map mixer document", |b| {
        b.iter(|| map_document(black_box(&doc), BASE, &config).unwrap())
    });
}

fn bench_serialize(c: &mut Criterion) {
    let graph = converted();
    c.bench_function("serialize turtle", |b| {
        b.iter(|| black_box(&graph).serialize_turtle())
    });
    let text = graph.serialize_turtle();
    c.bench_function("parse turtle", |b| {
        b.iter(|| RdfGraph::parse_turtle(black_box(&text)).unwrap())
    });
}

fn bench_query(c: &mut Criterion) {
    let graph = converted();
    let skill = format!("{BASE}#Mixer_Mixing_Continuous");
    let cq2 = BTreeMap::from([
        ("skill".to_string(), Term::iri(&skill)),
        ("value".to_string(), Term::integer(64)),
    ]);
    c.bench_function("cq2 state lookup", |b| {
        b.iter(|| run_cq(black_box(&graph), CqId::Cq2, &cq2).unwrap())
    });
    let cq7 = BTreeMap::from([("skill".to_string(), Term::iri(&skill))]);
    c.bench_function("cq7 endpoint resolution", |b| {
        b.iter(|| run_cq(black_box(&graph), CqId::Cq7, &cq7).unwrap())
    });
}

criterion_group!(benches, bench_parse, bench_map, bench_serialize, bench_query);
criterion_main!(benches);
