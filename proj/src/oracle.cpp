#include "privpol/oracle.hpp"

#include <algorithm>
#include <cstdio>

#include "privpol/rng.hpp"

namespace privpol {

std::string_view to_string(Answer a) {
    switch (a) {
        case Answer::irrelevant: return "irrelevant";
        case Answer::negative: return "negative";
        case Answer::positive: return "positive";
    }
    return "irrelevant";
}

std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::positive: return "positive";
        case Outcome::negative: return "negative";
        case Outcome::irrelevant: return "irrelevant";
        case Outcome::unaligned: return "unaligned";
    }
    return "unaligned";
}

Outcome parse_outcome(std::string_view s) {
    for (auto o : {Outcome::positive, Outcome::negative, Outcome::irrelevant, Outcome::unaligned}) {
        if (to_string(o) == s) return o;
    }
    throw std::invalid_argument("unknown outcome: " + std::string(s));
}

bool eligible(const WorkerProfile& w) { return w.approval_rate > 0.85 && w.hits_approved > 50; }

std::vector<WorkerProfile> make_worker_pool(std::size_t n, std::uint64_t seed, double competence_lo, double competence_hi) {
    if (!(competence_lo >= 0.5 && competence_hi <= 1.0 && competence_lo <= competence_hi))
        throw std::invalid_argument("worker competence range must lie within [0.5, 1]");
    Rng rng(derive_seed(seed, "workers"));
    std::vector<WorkerProfile> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        WorkerProfile w;
        char id[32];
        std::snprintf(id, sizeof id, "w%04zu", i);
        w.id = id;
        w.competence = competence_lo + (competence_hi - competence_lo) * uniform01(rng);
        w.approval_rate = 0.86 + 0.14 * uniform01(rng);
        w.hits_approved = 51 + static_cast<int>(uniform_index(rng, 5000));
        out.push_back(std::move(w));
    }
    return out;
}

Answer answer_of(const LabelResponse& r) {
    if (!r.q1_relevant) return Answer::irrelevant;
    return r.q2_collect ? Answer::positive : Answer::negative;
}

Agreement agreement(std::span<const LabelResponse> responses) {
    Agreement a;
    for (const auto& r : responses) {
        if (!r.honesty_ok) continue;
        ++a.usable;
        switch (answer_of(r)) {
            case Answer::positive: ++a.count_positive; break;
            case Answer::negative: ++a.count_negative; break;
            case Answer::irrelevant: ++a.count_irrelevant; break;
        }
    }
    if (a.usable == 0) throw NoUsableResponses();

    std::size_t best = a.count_positive;
    a.modal = Answer::positive;
    if (a.count_negative > best) {
        best = a.count_negative;
        a.modal = Answer::negative;
    }
    if (a.count_irrelevant > best) {
        best = a.count_irrelevant;
        a.modal = Answer::irrelevant;
    }
    a.ap = static_cast<double>(best) / static_cast<double>(a.usable);
    return a;
}

void validate_acceptance_threshold(double at) {
    if (!(at > 0.5)) throw std::invalid_argument("at must exceed 0.5");
    if (!(at <= 1.0)) throw std::invalid_argument("at must not exceed 1.0");
}

ConsolidatedLabel consolidate(std::span<const LabelResponse> responses, double at) {
    validate_acceptance_threshold(at);
    const auto a = agreement(responses);
    ConsolidatedLabel out;
    if (!responses.empty()) out.segment_id = responses.front().segment_id;
    out.ap = a.ap;
    out.n_responses = responses.size();
    if (a.ap >= at) {
        switch (a.modal) {
            case Answer::positive: out.outcome = Outcome::positive; break;
            case Answer::negative: out.outcome = Outcome::negative; break;
            case Answer::irrelevant: out.outcome = Outcome::irrelevant; break;
        }
    } else {
        out.outcome = Outcome::unaligned;
    }
    return out;
}

std::vector<LabelResponse> simulate_responses(std::string_view segment_id, const SegmentTruth& truth,
                                              std::span<const WorkerProfile> workers, const std::set<std::string>& exclude,
                                              std::uint64_t seed) {
    std::vector<std::size_t> available;
    for (std::size_t i = 0; i < workers.size(); ++i) {
        if (eligible(workers[i]) && !exclude.contains(workers[i].id)) available.push_back(i);
    }
    if (available.size() < kWorkersPerSegment) throw WorkerPoolExhausted();

    Rng pick_rng(derive_seed(seed, "pick"));
    const auto chosen = sample_without_replacement(available.size(), kWorkersPerSegment, pick_rng);

    std::vector<LabelResponse> out;
    out.reserve(kWorkersPerSegment);
    for (auto c : chosen) {
        const auto& w = workers[available[c]];
        Rng rng(derive_seed(seed, "answer", w.id));
        LabelResponse r;
        r.worker_id = w.id;
        r.segment_id = std::string(segment_id);
        r.honesty_ok = bernoulli(rng, kHonestyYesRate);
        const bool q1_correct = bernoulli(rng, w.competence);
        const bool truly_relevant = truth.truth != Answer::irrelevant;
        r.q1_relevant = q1_correct ? truly_relevant : !truly_relevant;
        const double coin = uniform01(rng);
        if (!r.q1_relevant) {
            r.q2_collect = false;
        } else if (!truly_relevant || truth.ambiguous) {
            r.q2_collect = coin < 0.5;
        } else {
            const bool truth_collect = truth.truth == Answer::positive;
            r.q2_collect = coin < w.competence ? truth_collect : !truth_collect;
        }
        out.push_back(std::move(r));
    }
    return out;
}

bool draw_ambiguous(double rate, std::uint64_t seed, std::string_view segment_id) {
    Rng rng(derive_seed(seed, "ambiguous", segment_id));
    return bernoulli(rng, rate);
}

std::string_view to_string(RelabelMode m) {
    return m == RelabelMode::label_and_discard ? "label_and_discard" : "incremental_relabel";
}

RelabelMode parse_relabel_mode(std::string_view s) {
    if (s == "label_and_discard" || s == "ld" || s == "discard") return RelabelMode::label_and_discard;
    if (s == "incremental_relabel" || s == "irl" || s == "relabel") return RelabelMode::incremental_relabel;
    throw std::invalid_argument("unknown relabel mode: " + std::string(s));
}

UnalignedAction handle_unaligned(RelabelMode mode, int labeling_iteration, int max_iterations) {
    if (mode == RelabelMode::label_and_discard) return UnalignedAction::discard;
    return labeling_iteration < max_iterations ? UnalignedAction::republish : UnalignedAction::mark_ambiguous;
}

double alignment_rate(std::span<const ConsolidatedLabel> outcomes) {
    if (outcomes.empty()) throw std::invalid_argument("alignment_rate: no published segments");
    const auto aligned = std::count_if(outcomes.begin(), outcomes.end(), [](const ConsolidatedLabel& c) {
        return c.outcome == Outcome::positive || c.outcome == Outcome::negative;
    });
    return static_cast<double>(aligned) / static_cast<double>(outcomes.size());
}

SimulatedOracle::SimulatedOracle(std::map<std::string, SegmentTruth> truths, std::vector<WorkerProfile> workers, std::uint64_t seed)
    : truths_(std::move(truths)), workers_(std::move(workers)), seed_(seed) {}

std::vector<LabelResponse> SimulatedOracle::respond(const std::string& segment_id, int labeling_iteration,
                                                    const std::set<std::string>& exclude) {
    const auto it = truths_.find(segment_id);
    if (it == truths_.end()) throw std::out_of_range("no ground truth for segment " + segment_id);
    return simulate_responses(segment_id, it->second, workers_, exclude,
                              derive_seed(seed_, "respond", segment_id, static_cast<std::uint64_t>(labeling_iteration)));
}

void LabelLedger::add_round(const std::string& segment_id, const std::vector<LabelResponse>& responses) {
    auto& entry = entries_[segment_id];
    std::set<std::string> round_workers;
    for (const auto& r : responses) {
        if (r.segment_id != segment_id) throw std::invalid_argument("response for " + r.segment_id + " filed under " + segment_id);
        if (entry.workers.contains(r.worker_id) || !round_workers.insert(r.worker_id).second)
            throw std::invalid_argument("worker " + r.worker_id + " already answered segment " + segment_id);
    }
    entry.workers.insert(round_workers.begin(), round_workers.end());
    entry.responses.insert(entry.responses.end(), responses.begin(), responses.end());
    ++entry.labeling_iteration;
    effort_ += responses.size();
}

const SegmentLedgerEntry* LabelLedger::find(const std::string& segment_id) const {
    const auto it = entries_.find(segment_id);
    return it == entries_.end() ? nullptr : &it->second;
}

int LabelLedger::labeling_iteration(const std::string& segment_id) const {
    const auto* e = find(segment_id);
    return e ? e->labeling_iteration : 0;
}

std::set<std::string> LabelLedger::workers_for(const std::string& segment_id) const {
    const auto* e = find(segment_id);
    return e ? e->workers : std::set<std::string>{};
}

}  // namespace privpol
