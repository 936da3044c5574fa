use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::OnceLock;

use crate::analysis::{build_table, SymbolicTable};
use crate::lang::{desugar_arrays, read_write_sets, Database, ObjectId, TransactionAst};
use crate::rewrite::{delta_transform, simplify_remote_reads, DeltaSchema, Placement, SiteId};

use super::SimError;

/// A replicated transactional system: transactions, where objects live and
/// where each transaction may run.
#[derive(Clone, Debug)]
pub struct SystemSpec {
    pub sites: u32,
    pub txns: Vec<TransactionAst>,
    /// Home site per transaction; `None` lets every site run it.
    pub homes: Vec<Option<SiteId>>,
    /// Parameter lists each transaction may be called with.
    pub domains: Vec<Vec<Vec<i64>>>,
    pub arrays: BTreeMap<String, usize>,
    /// Object locations and replicated objects. Transaction homes are
    /// taken from `homes`.
    pub placement: Placement,
    pub initial: Database,
}

pub type InstId = usize;
pub type CompId = usize;

/// One transaction with fixed parameters running at one site.
#[derive(Debug)]
pub struct Instance {
    pub txn: usize,
    pub site: SiteId,
    pub params: Vec<i64>,
    /// The instantiated, array-free source transaction.
    pub original: TransactionAst,
    pub comp: CompId,
    table: OnceLock<Result<SymbolicTable, SimError>>,
}

#[derive(Debug, Default)]
pub struct Component {
    /// Logical objects, then their deltas.
    pub objects: Vec<ObjectId>,
    pub logical: Vec<ObjectId>,
    pub instances: Vec<InstId>,
}

/// A system prepared for simulation: remote writes turned into deltas,
/// every runnable instance enumerated, and objects grouped into independent
/// components.
#[derive(Debug)]
pub struct CompiledSystem {
    pub spec: SystemSpec,
    /// Placement with tracked objects replicated, deltas located at their
    /// sites and a home for every variant.
    pub placement: Placement,
    pub schema: DeltaSchema,
    pub instances: Vec<Instance>,
    pub components: Vec<Component>,
    index: HashMap<(usize, SiteId, Vec<i64>), InstId>,
}

fn variant_name(txn: &TransactionAst, site: SiteId) -> String {
    format!("{}@{}", txn.name, site)
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl CompiledSystem {
    pub fn new(spec: SystemSpec) -> Result<Self, SimError> {
        if spec.sites == 0 {
            return Err(SimError::Config("sites must be positive".into()));
        }
        if spec.homes.len() != spec.txns.len() || spec.domains.len() != spec.txns.len() {
            return Err(SimError::Config("homes and domains must match transactions".into()));
        }
        let mut placement = spec.placement.clone();
        placement.sites = spec.sites;
        let mut drafts = Vec::new();
        for (t, txn) in spec.txns.iter().enumerate() {
            let sites: Vec<SiteId> = match spec.homes[t] {
                Some(h) if h >= 1 && h <= spec.sites => vec![h],
                Some(h) => return Err(SimError::Config(format!("home site {h} out of range"))),
                None => (1..=spec.sites).collect(),
            };
            for params in &spec.domains[t] {
                let inst = txn
                    .instantiate(params)
                    .map_err(|e| SimError::Config(format!("{}: {e}", txn.name)))?;
                let original = desugar_arrays(&inst, &spec.arrays)
                    .map_err(|e| SimError::Config(format!("{}: {e}", txn.name)))?;
                for &s in &sites {
                    drafts.push((t, s, params.clone(), original.clone()));
                }
            }
        }
        // Objects written away from their home are tracked with deltas like
        // replicated objects.
        let mut all_objects = BTreeSet::new();
        for (_, s, _, original) in &drafts {
            let (reads, writes) = read_write_sets(original);
            for x in reads.iter().chain(&writes) {
                if !placement.replicated.contains(x) && !placement.loc.contains_key(x) {
                    return Err(SimError::Unplaced(x.clone()));
                }
                all_objects.insert(x.clone());
            }
            for x in &writes {
                if !placement.replicated.contains(x) && placement.loc.get(x) != Some(s) {
                    placement.loc.remove(x);
                    placement.replicated.insert(x.clone());
                }
            }
        }
        let taken: BTreeSet<ObjectId> = all_objects
            .iter()
            .cloned()
            .chain(spec.initial.iter().map(|(x, _)| x.clone()))
            .collect();
        let schema = DeltaSchema::for_replicated(&placement, &taken);
        let mut placement = schema.extend_placement(&placement);
        for (t, txn) in spec.txns.iter().enumerate() {
            for s in 1..=spec.sites {
                if spec.homes[t].is_none_or(|h| h == s) {
                    placement.home.insert(variant_name(txn, s), s);
                }
            }
        }

        // Components: union over each instance's logical footprint.
        let objs: Vec<ObjectId> = all_objects.into_iter().collect();
        let pos: HashMap<&ObjectId, usize> = objs.iter().enumerate().map(|(i, o)| (o, i)).collect();
        let mut parent: Vec<usize> = (0..objs.len()).collect();
        let mut footprints = Vec::with_capacity(drafts.len());
        for (_, _, _, original) in &drafts {
            let (r, w) = read_write_sets(original);
            let fp: Vec<usize> = r.union(&w).map(|x| pos[x]).collect();
            for pair in fp.windows(2) {
                let (a, b) = (find(&mut parent, pair[0]), find(&mut parent, pair[1]));
                if a != b {
                    parent[a.max(b)] = a.min(b);
                }
            }
            footprints.push(fp);
        }
        let mut comp_of_root = HashMap::new();
        let mut components: Vec<Component> = Vec::new();
        let mut obj_comp = vec![usize::MAX; objs.len()];
        for i in 0..objs.len() {
            let r = find(&mut parent, i);
            let c = *comp_of_root.entry(r).or_insert_with(|| {
                components.push(Component::default());
                components.len() - 1
            });
            obj_comp[i] = c;
            components[c].logical.push(objs[i].clone());
        }
        for comp in &mut components {
            comp.objects = comp.logical.clone();
            for x in &comp.logical {
                comp.objects
                    .extend(schema.deltas_of(x).map(|(_, d)| d.clone()));
            }
        }
        let mut instances = Vec::with_capacity(drafts.len());
        let mut index = HashMap::with_capacity(drafts.len());
        for ((t, s, params, original), fp) in drafts.into_iter().zip(footprints) {
            // Instances touching nothing form their own empty component.
            let comp = match fp.first() {
                Some(&o) => obj_comp[o],
                None => {
                    components.push(Component::default());
                    components.len() - 1
                }
            };
            let id = instances.len();
            components[comp].instances.push(id);
            index.insert((t, s, params.clone()), id);
            instances.push(Instance {
                txn: t,
                site: s,
                params,
                original,
                comp,
                table: OnceLock::new(),
            });
        }
        Ok(CompiledSystem {
            spec,
            placement,
            schema,
            instances,
            components,
            index,
        })
    }

    pub fn sites(&self) -> u32 {
        self.spec.sites
    }

    pub fn instance_id(&self, txn: usize, site: SiteId, params: &[i64]) -> Option<InstId> {
        self.index.get(&(txn, site, params.to_vec())).copied()
    }

    /// Symbolic table of the site-local rewrite of an instance.
    pub fn table(&self, id: InstId) -> Result<&SymbolicTable, SimError> {
        let inst = &self.instances[id];
        inst.table
            .get_or_init(|| {
                let mut ast = inst.original.clone();
                ast.name = variant_name(&self.spec.txns[inst.txn], inst.site);
                let local = delta_transform(&ast, inst.site, &self.placement, &self.schema)
                    .map_err(|e| SimError::Config(e.to_string()))?;
                let local = simplify_remote_reads(&local);
                let (_, writes) = read_write_sets(&local);
                if let Some(x) = writes
                    .iter()
                    .find(|x| self.placement.loc.get(*x) != Some(&inst.site))
                {
                    return Err(SimError::RemoteWrite(x.clone(), inst.site));
                }
                build_table(&local).map_err(SimError::Analysis)
            })
            .as_ref()
            .map_err(|e| e.clone())
    }

    /// Whether `x` is a tracked object whose base copy every site holds.
    pub fn is_tracked(&self, x: &ObjectId) -> bool {
        self.schema.is_tracked(x)
    }

    /// Site holding the authoritative value of a non-base object.
    pub fn owner(&self, x: &ObjectId) -> Option<SiteId> {
        self.placement.loc.get(x).copied()
    }

    /// Logical values of the component's objects given a per-object reader
    /// for authoritative values: tracked objects fold their deltas in.
    pub fn logical_value(&self, x: &ObjectId, read: &impl Fn(&ObjectId) -> i64) -> i64 {
        let mut v = read(x);
        for (_, d) in self.schema.deltas_of(x) {
            v = v.wrapping_add(read(d));
        }
        v
    }
}
