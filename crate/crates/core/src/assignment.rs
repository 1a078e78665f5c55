//! Exact maximum-weight assignment of unit packets to time slots.
//!
//! Each item may occupy one slot in its feasible interval `[lo, hi]` and each
//! slot holds at most one item. Feasible item sets form a transversal
//! matroid, so taking items heaviest-first and keeping each one whose
//! addition stays feasible yields a maximum-weight set.
//!
//! The kept set is stored as its earliest-deadline-first schedule. Adding an
//! item only perturbs that schedule from the item's `lo` onward: at each slot
//! the EDF pick is the smaller of the old occupant and one carried item, and
//! the cascade ends at the first free slot (feasible) or when the carried
//! item is past its deadline (infeasible). The final table is the EDF
//! schedule of the optimal set, which fills every slot where some kept item
//! is available.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{Instance, PacketId, Time, Window};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AssignmentItem {
    pub id: PacketId,
    pub weight: f64,
    pub lo: Time,
    pub hi: Time,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AssignmentProblem {
    pub items: Vec<AssignmentItem>,
    /// Inclusive slot interval.
    pub first_slot: Time,
    pub last_slot: Time,
}

impl AssignmentProblem {
    pub fn new(items: Vec<AssignmentItem>, first_slot: Time, last_slot: Time) -> Result<Self> {
        let p = AssignmentProblem { items, first_slot, last_slot };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for it in &self.items {
            if it.lo > it.hi {
                return Err(Error::config(format!("item {} has empty range [{}, {}]", it.id, it.lo, it.hi)));
            }
            if it.lo < self.first_slot || it.hi > self.last_slot {
                return Err(Error::config(format!(
                    "item {} range [{}, {}] outside slots [{}, {}]",
                    it.id, it.lo, it.hi, self.first_slot, self.last_slot
                )));
            }
            if !(it.weight > 0.0 && it.weight.is_finite()) {
                return Err(Error::config(format!("item {} has non-positive weight {}", it.id, it.weight)));
            }
        }
        Ok(())
    }

    pub fn slot_count(&self) -> usize {
        (self.last_slot - self.first_slot + 1).max(0) as usize
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AssignmentSolution {
    /// Packet id to slot.
    pub assigned: BTreeMap<PacketId, Time>,
    pub total_weight: f64,
}

impl AssignmentSolution {
    /// The packet assigned to `slot`, if any.
    pub fn at_slot(&self, slot: Time) -> Option<PacketId> {
        self.assigned.iter().find(|&(_, &s)| s == slot).map(|(&id, _)| id)
    }

    /// Checks injectivity, range membership and the stored total.
    pub fn is_feasible_for(&self, problem: &AssignmentProblem) -> bool {
        let by_id: BTreeMap<PacketId, &AssignmentItem> = problem.items.iter().map(|it| (it.id, it)).collect();
        let mut used = std::collections::BTreeSet::new();
        let mut total = 0.0;
        for (id, &slot) in &self.assigned {
            let Some(it) = by_id.get(id) else { return false };
            if slot < it.lo || slot > it.hi || !used.insert(slot) {
                return false;
            }
            total += it.weight;
        }
        (total - self.total_weight).abs() <= 1e-9 * total.abs().max(1.0)
    }
}

/// Heaviest first; ties by earlier deadline, then lower id.
fn greedy_order(a: &AssignmentItem, b: &AssignmentItem) -> Ordering {
    b.weight.total_cmp(&a.weight).then(a.hi.cmp(&b.hi)).then(a.id.cmp(&b.id))
}

/// EDF priority: earlier deadline, then heavier, then lower id.
fn edf_less(a: &AssignmentItem, b: &AssignmentItem) -> bool {
    a.hi.cmp(&b.hi).then(b.weight.total_cmp(&a.weight)).then(a.id.cmp(&b.id)) == Ordering::Less
}

/// Optimal EDF slot table for `items` over `first..=last`; entry `k` holds the
/// index (into `items`) of the item in slot `first + k`. Items must lie
/// inside the slot range.
pub(crate) fn schedule_table(items: &[AssignmentItem], first: Time, last: Time) -> Vec<Option<usize>> {
    let n_slots = (last - first + 1).max(0) as usize;
    let mut table: Vec<Option<usize>> = vec![None; n_slots];
    if n_slots == 0 || items.is_empty() {
        return table;
    }
    let mut order: Vec<usize> = (0..items.len()).collect();
    order.sort_by(|&a, &b| greedy_order(&items[a], &items[b]));

    let mut kept = 0usize;
    for idx in order {
        if kept == n_slots {
            break;
        }
        if cascade_fits(items, &table, first, idx) {
            cascade_insert(items, &mut table, first, idx);
            kept += 1;
        }
    }
    table
}

fn cascade_fits(items: &[AssignmentItem], table: &[Option<usize>], first: Time, new: usize) -> bool {
    let mut carried = new;
    let mut t = items[new].lo;
    loop {
        if items[carried].hi < t {
            return false;
        }
        match table[(t - first) as usize] {
            None => return true,
            Some(j) => {
                if edf_less(&items[carried], &items[j]) {
                    carried = j;
                }
            }
        }
        t += 1;
    }
}

fn cascade_insert(items: &[AssignmentItem], table: &mut [Option<usize>], first: Time, new: usize) {
    let mut carried = new;
    let mut t = items[new].lo;
    loop {
        debug_assert!(items[carried].hi >= t);
        let cell = &mut table[(t - first) as usize];
        match *cell {
            None => {
                *cell = Some(carried);
                return;
            }
            Some(j) => {
                if edf_less(&items[carried], &items[j]) {
                    *cell = Some(carried);
                    carried = j;
                }
            }
        }
        t += 1;
    }
}

fn table_to_solution(items: &[AssignmentItem], table: &[Option<usize>], first: Time) -> AssignmentSolution {
    let mut sol = AssignmentSolution::default();
    for (k, cell) in table.iter().enumerate() {
        if let Some(i) = *cell {
            sol.assigned.insert(items[i].id, first + k as Time);
            sol.total_weight += items[i].weight;
        }
    }
    sol
}

/// Maximum-total-weight assignment, canonicalized so that earlier slots are
/// filled by earlier deadlines.
pub fn solve(problem: &AssignmentProblem) -> AssignmentSolution {
    let table = schedule_table(&problem.items, problem.first_slot, problem.last_slot);
    table_to_solution(&problem.items, &table, problem.first_slot)
}

/// Exhaustive search over every injective feasible assignment. Refuses
/// problems with more than 10 items or 10 slots.
pub fn solve_bruteforce(problem: &AssignmentProblem) -> Result<AssignmentSolution> {
    let slots = problem.slot_count();
    if problem.items.len() > 10 || slots > 10 {
        return Err(Error::TooLarge { items: problem.items.len(), slots });
    }

    struct Search<'a> {
        items: &'a [AssignmentItem],
        first: Time,
        current: Vec<Option<Time>>,
        best: Vec<Option<Time>>,
        best_weight: f64,
    }

    impl Search<'_> {
        fn go(&mut self, idx: usize, used: u32, weight: f64) {
            if idx == self.items.len() {
                if weight > self.best_weight {
                    self.best_weight = weight;
                    self.best.clone_from(&self.current);
                }
                return;
            }
            self.current[idx] = None;
            self.go(idx + 1, used, weight);
            let it = self.items[idx];
            for slot in it.lo..=it.hi {
                let bit = 1u32 << (slot - self.first);
                if used & bit == 0 {
                    self.current[idx] = Some(slot);
                    self.go(idx + 1, used | bit, weight + it.weight);
                }
            }
            self.current[idx] = None;
        }
    }

    let n = problem.items.len();
    let mut search = Search {
        items: &problem.items,
        first: problem.first_slot,
        current: vec![None; n],
        best: vec![None; n],
        best_weight: 0.0,
    };
    search.go(0, 0, 0.0);

    let mut sol = AssignmentSolution::default();
    for (it, slot) in problem.items.iter().zip(&search.best) {
        if let Some(s) = slot {
            sol.assigned.insert(it.id, *s);
            sol.total_weight += it.weight;
        }
    }
    Ok(sol)
}

/// Which slots the offline optimum may use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OfflineMode {
    /// Optimize total weight over `1..=t_end`, then count only the weight
    /// placed in the measurement window. With a partial window this can fall
    /// below an online ζ, mostly on short runs.
    #[default]
    FullHorizon,
    /// Optimize over the window slots alone. Bounds every online windowed ζ,
    /// but may spend packets that any online run used during warm-up.
    WindowOnly,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OfflineOptimum {
    /// Weight of scheduled packets whose slot lies in the window.
    pub zeta_off: f64,
    pub schedule: AssignmentSolution,
}

/// Clairvoyant optimum over `instance`, using [`OfflineMode::FullHorizon`].
pub fn offline_optimum(instance: &Instance, t_end: Time, window: Window) -> Result<OfflineOptimum> {
    offline_optimum_with(instance, t_end, window, OfflineMode::FullHorizon)
}

pub fn offline_optimum_with(
    instance: &Instance,
    t_end: Time,
    window: Window,
    mode: OfflineMode,
) -> Result<OfflineOptimum> {
    window.check(t_end)?;
    let (first, last) = match mode {
        OfflineMode::FullHorizon => (1, t_end),
        OfflineMode::WindowOnly => (window.first, window.last),
    };
    let items: Vec<AssignmentItem> = instance
        .packets
        .iter()
        .filter_map(|p| {
            let lo = p.release.max(first);
            let hi = p.deadline.min(last);
            (lo <= hi).then_some(AssignmentItem { id: p.id, weight: p.weight, lo, hi })
        })
        .collect();
    let problem = AssignmentProblem { items, first_slot: first, last_slot: last };
    let schedule = solve(&problem);
    let zeta_off = schedule
        .assigned
        .iter()
        .filter(|&(_, &slot)| window.contains(slot))
        .map(|(&id, _)| instance.packets[id].weight)
        .sum();
    Ok(OfflineOptimum { zeta_off, schedule })
}
