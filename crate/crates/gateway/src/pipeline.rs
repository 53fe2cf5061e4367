//! Phase orchestration: structural part, event extraction, fusion and
//! rules, then optional evolution analytics.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Duration;

use msem_construct::external::parse_records;
use msem_construct::{
    apply_rules, cluster_unmatched, ingest_triples, merge_external, parse_triples, skg_stats, AliasIndex, Classifier,
    ConstructError, Coverage, FileKgClient, Fuser, FusionReport, HttpKgClient, IngestReport, KgClient, KgRecord,
    MergeReport, PredicateMap, Rulebase, SkgStats, TripleFormat, UnmatchedCluster,
};
use msem_core::Model;
use msem_evolution::EvolutionReport;
use msem_extract::{
    assemble_tags, extract, fit, pair_sentences, record, tokenize, Checkpoint, JointModelF64, RelationLabel, Tag,
    TitlePair, TrainingSample,
};
use serde::{Deserialize, Serialize};

use crate::config::{PipelineConfig, SeedStream};
use crate::corpus::{parse_corpus, Corpus};
use crate::error::{read, GatewayError};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SkgSummary {
    pub ingest: Option<IngestReport>,
    pub merge: Option<MergeReport>,
    pub stats: SkgStats,
}

pub fn build_skg(cfg: &PipelineConfig) -> Result<(Model, SkgSummary), GatewayError> {
    let mut model = Model::new();
    let mut ingest = None;
    if let (Some(triples), Some(classifier)) = (&cfg.paths.triples, &cfg.paths.classifier) {
        let classifier = Classifier::from_json(&read(classifier)?).map_err(|e| GatewayError::stage("skg", e))?;
        let format = match triples.extension().and_then(|e| e.to_str()) {
            Some("jsonl" | "json") => TripleFormat::Jsonl,
            _ => TripleFormat::Tsv,
        };
        let (parsed, skipped) = parse_triples(&read(triples)?, format);
        let mut report = ingest_triples(&mut model, &parsed, &classifier, &PredicateMap::default())
            .map_err(|e| GatewayError::stage("skg", e))?;
        report.skipped = skipped;
        ingest = Some(report);
    }
    let mut merge = None;
    if let Some(path) = &cfg.paths.external {
        let records = parse_records(&read(path)?).map_err(|e| GatewayError::stage("skg", e))?;
        let mut index = AliasIndex::build(&model);
        merge = Some(merge_external(&mut model, &records, &mut index).map_err(|e| GatewayError::stage("skg", e))?);
    }
    let stats = skg_stats(&model);
    Ok((model, SkgSummary { ingest, merge, stats }))
}

/// Gold tags for one sentence pair of a corpus document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldPair {
    pub doc: String,
    #[serde(default)]
    pub pair: usize,
    pub c: RelationLabel,
    pub x1: Vec<String>,
    pub x2: Vec<String>,
    pub y1: Vec<Tag>,
    pub y2: Vec<Tag>,
}

impl GoldPair {
    pub fn sample(&self) -> Result<TrainingSample, msem_extract::ExtractError> {
        TrainingSample::new(self.c, self.x1.clone(), self.y1.clone(), self.x2.clone(), self.y2.clone())
    }
}

fn jsonl<T: for<'de> Deserialize<'de>>(path: &Path, stage: &'static str) -> Result<Vec<T>, GatewayError> {
    read(path)?
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| GatewayError::stage(stage, format!("{} line {}: {e}", path.display(), i + 1)))
        })
        .collect()
}

pub fn read_samples(path: &Path) -> Result<Vec<TrainingSample>, GatewayError> {
    let mut samples: Vec<TrainingSample> = jsonl(path, "extract")?;
    for s in &mut samples {
        s.normalize().map_err(|e| GatewayError::stage("extract", e))?;
    }
    Ok(samples)
}

/// Gold annotations take precedence per pair; other pairs go through the
/// model when there is one.
#[derive(Debug, Clone, Default)]
pub struct Extractor {
    pub model: Option<JointModelF64>,
    pub gold: BTreeMap<(String, usize), GoldPair>,
}

pub fn load_extractor(cfg: &PipelineConfig) -> Result<Extractor, GatewayError> {
    let mut ex = Extractor::default();
    if let Some(path) = &cfg.paths.annotations {
        for g in jsonl::<GoldPair>(path, "extract")? {
            ex.gold.insert((g.doc.clone(), g.pair), g);
        }
    }
    if let Some(path) = &cfg.paths.checkpoint {
        let ckpt = Checkpoint::<f64>::load(path).map_err(|e| GatewayError::stage("extract", e))?;
        ex.model = Some(ckpt.into_model().map_err(|e| GatewayError::stage("extract", e))?);
    } else if let Some(path) = &cfg.paths.training {
        let samples = read_samples(path)?;
        let (model, _) = fit(&samples, cfg.model_config(), &cfg.train_config()).map_err(|e| GatewayError::stage("extract", e))?;
        ex.model = Some(model);
    }
    Ok(ex)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractSummary {
    pub docs: usize,
    pub pairs: usize,
    pub from_gold: usize,
    pub from_model: usize,
    /// Pairs with neither gold tags nor a model.
    pub unannotated: usize,
    pub events: usize,
    pub links: usize,
    pub diagnostics: usize,
}

pub fn extract_phase(corpus: &Corpus, ex: &Extractor, model: &mut Model) -> Result<ExtractSummary, GatewayError> {
    let mut s = ExtractSummary { docs: corpus.docs.len(), ..Default::default() };
    let before = model.events().len();
    for doc in &corpus.docs {
        for (i, (first, second)) in pair_sentences(&doc.title).iter().enumerate() {
            s.pairs += 1;
            let input = TitlePair { doc: &doc.id, first, second: second.as_deref(), published: Some(doc.published_at) };
            let ext = if let Some(g) = ex.gold.get(&(doc.id.clone(), i)) {
                let x2 = second.as_deref().map(tokenize).unwrap_or_default();
                if tokenize(first) != g.x1 || x2 != g.x2 {
                    return Err(GatewayError::at_doc("extract", &doc.id, format!("gold tokens of pair {i} differ from the title")));
                }
                s.from_gold += 1;
                assemble_tags(&input, &g.y1, &g.y2, g.c)
            } else if let Some(m) = &ex.model {
                s.from_model += 1;
                extract(m, &input).map_err(|e| GatewayError::at_doc("extract", &doc.id, e))?
            } else {
                s.unannotated += 1;
                continue;
            };
            let (_, diags) = record(model, &ext).map_err(|e| GatewayError::at_doc("extract", &doc.id, e))?;
            s.links += usize::from(ext.link.is_some() && diags.is_empty());
            s.diagnostics += ext.diagnostics.len() + diags.len();
        }
    }
    s.events = model.events().len() - before;
    Ok(s)
}

/// Lookup source that knows nothing.
struct NoKg;

impl KgClient for NoKg {
    fn lookup(&self, _: &str) -> Result<Option<KgRecord>, ConstructError> {
        Ok(None)
    }
}

pub fn kg_client(cfg: &PipelineConfig) -> Result<Box<dyn KgClient>, GatewayError> {
    if let Some(url) = &cfg.kg_endpoint {
        return Ok(Box::new(HttpKgClient::new(url.clone(), Duration::from_millis(cfg.kg_timeout_ms))));
    }
    if let Some(path) = &cfg.paths.kg {
        return Ok(Box::new(FileKgClient::from_jsonl(&read(path)?).map_err(|e| GatewayError::stage("fuse", e))?));
    }
    Ok(Box::new(NoKg))
}

pub fn fuse_phase(cfg: &PipelineConfig, model: &mut Model) -> Result<FusionReport, GatewayError> {
    let client = kg_client(cfg)?;
    let classifier = match &cfg.paths.classifier {
        Some(p) => Some(Classifier::from_json(&read(p)?).map_err(|e| GatewayError::stage("fuse", e))?),
        None => None,
    };
    let mut fuser = Fuser::new(model, client.as_ref());
    if let Some(c) = &classifier {
        fuser = fuser.with_hints(c);
    }
    fuser.fuse_all(model).map_err(|e| GatewayError::stage("fuse", e))
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RulesSummary {
    pub coverage: Coverage,
    pub ratio: f64,
    pub quintuples: usize,
    pub skipped: usize,
    pub unmatched: Vec<UnmatchedCluster>,
}

pub fn rules_phase(cfg: &PipelineConfig, model: &mut Model) -> Result<Option<RulesSummary>, GatewayError> {
    let Some(path) = &cfg.paths.rules else { return Ok(None) };
    let rules = Rulebase::from_json(&read(path)?).map_err(|e| GatewayError::stage("rules", e))?;
    let report = apply_rules(model, &rules).map_err(|e| GatewayError::stage("rules", e))?;
    let texts: Vec<_> = report
        .unmatched
        .iter()
        .filter_map(|&id| model.event(id))
        .map(|e| (e.id, e.title.clone().unwrap_or_else(|| e.action.clone())))
        .collect();
    Ok(Some(RulesSummary {
        ratio: report.coverage.ratio(),
        coverage: report.coverage,
        quintuples: report.quintuples.len(),
        skipped: report.skipped.len(),
        unmatched: cluster_unmatched(&texts, cfg.clusters, cfg.seed_for(SeedStream::Clustering)),
    }))
}

pub fn evolve_phase(cfg: &PipelineConfig, model: &Model) -> Result<Option<EvolutionReport>, GatewayError> {
    if cfg.evolution.snapshots.is_empty() {
        return Ok(None);
    }
    msem_evolution::evolution_report(model, &cfg.evolution.snapshots, &cfg.evolution_config())
        .map(Some)
        .map_err(|e| GatewayError::stage("evolve", e))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelStats {
    pub entities: usize,
    pub events: usize,
    pub structural: usize,
    pub evolutionary: usize,
}

impl ModelStats {
    pub fn of(model: &Model) -> Self {
        ModelStats {
            entities: model.entities().len(),
            events: model.events().len(),
            structural: model.structural().len(),
            evolutionary: model.evolutionary().len(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CorpusSummary {
    pub docs: usize,
    pub skipped: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExitReport {
    pub corpus: CorpusSummary,
    pub skg: SkgSummary,
    pub extraction: ExtractSummary,
    pub fusion: FusionReport,
    pub rules: Option<RulesSummary>,
    pub evolution: Option<EvolutionReport>,
    pub stats: ModelStats,
}

pub struct PipelineRun {
    pub model: Model,
    pub report: ExitReport,
}

pub fn load_corpus(cfg: &PipelineConfig) -> Result<Corpus, GatewayError> {
    Ok(match &cfg.paths.corpus {
        Some(p) => parse_corpus(&read(p)?),
        None => Corpus::default(),
    })
}

/// Last construction phase to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    Skg,
    Extract,
    Fuse,
    Rules,
}

/// Structural part through rules, stopping before evolution.
pub fn construct(cfg: &PipelineConfig) -> Result<PipelineRun, GatewayError> {
    construct_until(cfg, Stage::Rules)
}

pub fn construct_until(cfg: &PipelineConfig, last: Stage) -> Result<PipelineRun, GatewayError> {
    let (mut model, skg) = build_skg(cfg)?;
    let mut report = ExitReport { skg, ..Default::default() };
    if last >= Stage::Extract {
        let corpus = load_corpus(cfg)?;
        let extractor = load_extractor(cfg)?;
        report.corpus = CorpusSummary { docs: corpus.docs.len(), skipped: corpus.skipped.len() };
        report.extraction = extract_phase(&corpus, &extractor, &mut model)?;
    }
    if last >= Stage::Fuse {
        report.fusion = fuse_phase(cfg, &mut model)?;
    }
    if last >= Stage::Rules {
        report.rules = rules_phase(cfg, &mut model)?;
    }
    report.stats = ModelStats::of(&model);
    Ok(PipelineRun { model, report })
}

pub fn run_pipeline(cfg: &PipelineConfig) -> Result<PipelineRun, GatewayError> {
    let mut run = construct(cfg)?;
    run.report.evolution = evolve_phase(cfg, &run.model)?;
    Ok(run)
}

impl PipelineRun {
    /// Writes `model.json`, `coverage.json` and `report.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(), GatewayError> {
        let io = |path: &Path, source| GatewayError::Io { path: path.to_path_buf(), source };
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        let coverage = self.report.rules.as_ref().map(|r| &r.coverage);
        let files = [
            ("model.json", self.model.to_json()),
            ("coverage.json", serde_json::to_string_pretty(&coverage).expect("serializable")),
            ("report.json", serde_json::to_string_pretty(&self.report).expect("serializable")),
        ];
        for (name, body) in files {
            let path = dir.join(name);
            std::fs::write(&path, body).map_err(|e| io(&path, e))?;
        }
        Ok(())
    }
}
