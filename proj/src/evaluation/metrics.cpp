// Copyright 2026 The lipfit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "lipfit/evaluation/metrics.hpp"

#include "lipfit/core/error.hpp"

#include <cmath>
#include <unordered_map>

namespace lipfit {

namespace {

std::vector<std::string> viseme_words(const Phonemized& p, const VisemeMap& map, bool merge) {
    std::vector<std::string> out;
    out.reserve(p.pronunciations.size());
    for (const auto& pron : p.pronunciations) {
        std::string token;
        for (const auto& v : to_visemes(pron, map, merge)) {
            if (!token.empty()) {
                token.push_back(' ');
            }
            token += v;
        }
        out.push_back(std::move(token));
    }
    return out;
}

void require_reference(std::size_t length, const char* what) {
    if (length == 0) {
        throw ParameterError(std::string(what) + ": empty reference");
    }
}

struct VisemeScores {
    ErrorRate ver, vwer;
    std::vector<std::string> oov;
};

VisemeScores score_visemes(const Transcript& ref, const Transcript& hyp, const Lexicon& lexicon, const VisemeMap& map,
                           const VisemeOptions& o) {
    const Phonemized pr = phonemize(ref, lexicon, o.oov);
    const Phonemized ph = phonemize(hyp, lexicon, o.oov);
    VisemeScores s;
    const auto vr = to_visemes(pr.flat(), map, o.merge_repeats);
    const auto vh = to_visemes(ph.flat(), map, o.merge_repeats);
    require_reference(vr.size(), "ver");
    s.ver = {edit_distance(vr, vh), vr.size()};
    const auto wr = viseme_words(pr, map, o.merge_repeats);
    const auto wh = viseme_words(ph, map, o.merge_repeats);
    s.vwer = {edit_distance(wr, wh), wr.size()};
    s.oov = pr.oov;
    s.oov.insert(s.oov.end(), ph.oov.begin(), ph.oov.end());
    return s;
}

void score_row(UtteranceMetrics& row, const Lexicon& lexicon, const VisemeMap& map, const VisemeOptions& o) {
    try {
        const Transcript ref(row.reference), hyp(row.hypothesis);
        row.cer = cer(ref, hyp);
        row.wer = wer(ref, hyp);
        VisemeScores v = score_visemes(ref, hyp, lexicon, map, o);
        row.ver = v.ver;
        row.vwer = v.vwer;
        row.oov = std::move(v.oov);
    } catch (const Error& e) {
        row.failed = true;
        row.failure = e.what();
    }
}

nlohmann::json rate_json(const ErrorRate& r) {
    nlohmann::json j = {{"distance", r.edits.distance},
                        {"substitutions", r.edits.substitutions},
                        {"insertions", r.edits.insertions},
                        {"deletions", r.edits.deletions},
                        {"reference_length", r.reference_length}};
    j["rate"] = r.reference_length > 0 ? nlohmann::json(r.rate()) : nlohmann::json(nullptr);
    return j;
}

MetricReport aggregate(std::vector<UtteranceMetrics> rows) {
    MetricReport report;
    for (const auto& row : rows) {
        report.missing_hypotheses += row.missing_hypothesis ? 1 : 0;
        if (row.failed) {
            ++report.failed;
            continue;
        }
        ++report.scored;
        report.cer += row.cer;
        report.wer += row.wer;
        report.ver += row.ver;
        report.vwer += row.vwer;
        report.oov_words += static_cast<int>(row.oov.size());
    }
    report.utterances = std::move(rows);
    return report;
}

} // namespace

double ErrorRate::rate() const {
    require_reference(reference_length, "error rate");
    return static_cast<double>(edits.distance) / static_cast<double>(reference_length);
}

ErrorRate cer(const Transcript& ref, const Transcript& hyp) {
    require_reference(ref.normalized.size(), "cer");
    return {edit_distance(ref.normalized, hyp.normalized), ref.normalized.size()};
}

ErrorRate wer(const Transcript& ref, const Transcript& hyp) {
    require_reference(ref.words.size(), "wer");
    return {edit_distance(ref.words, hyp.words), ref.words.size()};
}

ErrorRate ver(const Transcript& ref, const Transcript& hyp, const Lexicon& lexicon, const VisemeMap& map,
              const VisemeOptions& options) {
    return score_visemes(ref, hyp, lexicon, map, options).ver;
}

ErrorRate vwer(const Transcript& ref, const Transcript& hyp, const Lexicon& lexicon, const VisemeMap& map,
               const VisemeOptions& options) {
    return score_visemes(ref, hyp, lexicon, map, options).vwer;
}

ScriptedRecognizer::ScriptedRecognizer(std::string name, std::map<std::string, std::string> hypotheses)
    : name_(std::move(name)), hypotheses_(std::move(hypotheses)) {}

std::string ScriptedRecognizer::transcribe(const Utterance& utterance) const {
    const auto it = hypotheses_.find(utterance.id);
    if (it == hypotheses_.end()) {
        throw DataError("recognizer '" + name_ + "' has no transcription for '" + utterance.id + "'");
    }
    return it->second;
}

std::unique_ptr<Recognizer> make_echo_recognizer(const std::vector<std::pair<std::string, std::string>>& references) {
    return std::make_unique<ScriptedRecognizer>("echo",
                                                std::map<std::string, std::string>(references.begin(), references.end()));
}

MetricReport evaluate_corpus(const Recognizer& recognizer, const std::vector<Utterance>& utterances,
                             const std::vector<std::pair<std::string, std::string>>& references, const Lexicon& lexicon,
                             const VisemeMap& map, const EvaluationOptions& options) {
    const std::unordered_map<std::string, std::string> refs(references.begin(), references.end());
    std::vector<UtteranceMetrics> rows(utterances.size());
    const auto n = static_cast<long>(utterances.size());
    const double fps = recognizer.expected_fps();
#pragma omp parallel for schedule(dynamic) if (options.parallel)
    for (long i = 0; i < n; ++i) {
        const Utterance& u = utterances[static_cast<std::size_t>(i)];
        UtteranceMetrics& row = rows[static_cast<std::size_t>(i)];
        row.id = u.id;
        const auto ref = refs.find(u.id);
        if (ref == refs.end()) {
            row.failed = true;
            row.failure = "no reference transcript";
            continue;
        }
        row.reference = ref->second;
        if (fps > 0.0 && std::abs(u.fps - fps) > 1e-6) {
            row.failed = true;
            row.failure = "frame rate " + std::to_string(u.fps) + " does not match the recognizer's " + std::to_string(fps);
            continue;
        }
        try {
            row.hypothesis = recognizer.transcribe(u);
        } catch (const std::exception& e) {
            row.failed = true;
            row.failure = std::string("recognizer failed: ") + e.what();
            continue;
        }
        score_row(row, lexicon, map, options.visemes);
    }
    MetricReport report = aggregate(std::move(rows));
    report.recognizer = recognizer.name();
    report.viseme_map = map.name();
    return report;
}

MetricReport evaluate_transcripts(const std::vector<std::pair<std::string, std::string>>& references,
                                  const std::vector<std::pair<std::string, std::string>>& hypotheses,
                                  const Lexicon& lexicon, const VisemeMap& map, const EvaluationOptions& options) {
    const std::unordered_map<std::string, std::string> hyps(hypotheses.begin(), hypotheses.end());
    std::vector<UtteranceMetrics> rows(references.size());
    for (std::size_t i = 0; i < references.size(); ++i) {
        UtteranceMetrics& row = rows[i];
        row.id = references[i].first;
        row.reference = references[i].second;
        if (const auto it = hyps.find(row.id); it != hyps.end()) {
            row.hypothesis = it->second;
        } else {
            row.missing_hypothesis = true;
        }
        score_row(row, lexicon, map, options.visemes);
    }
    MetricReport report = aggregate(std::move(rows));
    report.recognizer = "transcripts";
    report.viseme_map = map.name();
    return report;
}

nlohmann::json MetricReport::to_json() const {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& u : utterances) {
        nlohmann::json r = {{"id", u.id}, {"reference", u.reference}, {"hypothesis", u.hypothesis}, {"failed", u.failed}};
        if (u.failed) {
            r["failure"] = u.failure;
        } else {
            r["CER"] = rate_json(u.cer);
            r["WER"] = rate_json(u.wer);
            r["VER"] = rate_json(u.ver);
            r["VWER"] = rate_json(u.vwer);
            r["oov"] = u.oov;
        }
        if (u.missing_hypothesis) {
            r["missing_hypothesis"] = true;
        }
        rows.push_back(std::move(r));
    }
    return {{"recognizer", recognizer},
            {"viseme_map", viseme_map},
            {"utterances", std::move(rows)},
            {"aggregate",
             {{"CER", rate_json(cer)},
              {"WER", rate_json(wer)},
              {"VER", rate_json(ver)},
              {"VWER", rate_json(vwer)},
              {"scored", scored},
              {"failed", failed},
              {"missing_hypotheses", missing_hypotheses},
              {"oov_words", oov_words}}}};
}

} // namespace lipfit
