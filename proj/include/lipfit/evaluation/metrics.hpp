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

#pragma once

#include "lipfit/core/tensor.hpp"
#include "lipfit/evaluation/edit_distance.hpp"
#include "lipfit/evaluation/phonetics.hpp"
#include "lipfit/evaluation/transcript.hpp"

#include <nlohmann/json.hpp>

#include <map>
#include <memory>
#include <string>
#include <vector>

namespace lipfit {

/// Edits against a reference of `reference_length` tokens.
struct ErrorRate {
    EditCounts edits;
    std::size_t reference_length = 0;

    /// edits / reference length; above 1 when insertions dominate. ParameterError on an empty reference.
    [[nodiscard]] double rate() const;
    ErrorRate& operator+=(const ErrorRate& o) {
        edits += o.edits;
        reference_length += o.reference_length;
        return *this;
    }
};

struct VisemeOptions {
    OovPolicy oov = OovPolicy::Skip;
    bool merge_repeats = false;
};

/// Character tokens of the normalized text, spaces included.
ErrorRate cer(const Transcript& ref, const Transcript& hyp);
ErrorRate wer(const Transcript& ref, const Transcript& hyp);
/// Flattened viseme tokens of both transcripts.
ErrorRate ver(const Transcript& ref, const Transcript& hyp, const Lexicon& lexicon, const VisemeMap& map,
              const VisemeOptions& options = {});
/// One token per word: the word's viseme string. Reference length counts the
/// reference words that phonemized.
ErrorRate vwer(const Transcript& ref, const Transcript& hyp, const Lexicon& lexicon, const VisemeMap& map,
               const VisemeOptions& options = {});

/// Mouth-crop sequence handed to a recognizer.
struct Utterance {
    std::string id;
    std::vector<Tensor3> crops;
    double fps = 25.0;
};

/// Transcription back end: crop sequence in, text out. Implementations must be
/// safe to call concurrently.
class Recognizer {
public:
    virtual ~Recognizer() = default;
    [[nodiscard]] virtual std::string name() const = 0;
    /// Frame rate the model was trained at; 0 accepts any.
    [[nodiscard]] virtual double expected_fps() const { return 0.0; }
    /// Throws on failure; the utterance is then excluded and counted.
    [[nodiscard]] virtual std::string transcribe(const Utterance& utterance) const = 0;
};

/// Returns a fixed hypothesis per utterance id; unknown ids fail.
class ScriptedRecognizer final : public Recognizer {
public:
    ScriptedRecognizer(std::string name, std::map<std::string, std::string> hypotheses);
    [[nodiscard]] std::string name() const override { return name_; }
    [[nodiscard]] std::string transcribe(const Utterance& utterance) const override;

private:
    std::string name_;
    std::map<std::string, std::string> hypotheses_;
};

/// Perfect recognizer for testing: returns the reference text.
std::unique_ptr<Recognizer> make_echo_recognizer(const std::vector<std::pair<std::string, std::string>>& references);

class EmptyRecognizer final : public Recognizer {
public:
    [[nodiscard]] std::string name() const override { return "empty"; }
    [[nodiscard]] std::string transcribe(const Utterance&) const override { return {}; }
};

struct UtteranceMetrics {
    std::string id;
    std::string reference;
    std::string hypothesis;
    bool failed = false;
    std::string failure;
    bool missing_hypothesis = false;
    ErrorRate cer, wer, ver, vwer;
    std::vector<std::string> oov;  ///< out-of-vocabulary words of reference and hypothesis
};

/// Per-utterance rows and pooled aggregates (total edits over total reference length).
struct MetricReport {
    std::string recognizer;
    std::string viseme_map;
    std::vector<UtteranceMetrics> utterances;
    ErrorRate cer, wer, ver, vwer;
    int scored = 0;
    int failed = 0;
    int missing_hypotheses = 0;
    int oov_words = 0;

    [[nodiscard]] nlohmann::json to_json() const;
};

struct EvaluationOptions {
    VisemeOptions visemes;
    bool parallel = true;
};

/**
 * Transcribes every utterance and scores it against its reference. An
 * utterance fails (and is excluded from the aggregates) when the recognizer
 * throws, its frame rate does not match the recognizer's, it has no
 * reference, or the reference is empty after normalization.
 * Rows keep the order of `utterances`; aggregation is serial.
 */
MetricReport evaluate_corpus(const Recognizer& recognizer, const std::vector<Utterance>& utterances,
                             const std::vector<std::pair<std::string, std::string>>& references, const Lexicon& lexicon,
                             const VisemeMap& map, const EvaluationOptions& options = {});

/// File-based scoring: a reference without a hypothesis is scored against the
/// empty string and flagged `missing_hypothesis`. Hypotheses without a
/// reference are ignored.
MetricReport evaluate_transcripts(const std::vector<std::pair<std::string, std::string>>& references,
                                  const std::vector<std::pair<std::string, std::string>>& hypotheses,
                                  const Lexicon& lexicon, const VisemeMap& map, const EvaluationOptions& options = {});

} // namespace lipfit
