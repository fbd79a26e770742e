#pragma once

// Word <-> subword alignment. The first subword of each word carries the
// word's label; continuation subwords and sequence start/end tokens are
// masked. The separator token stays unmasked with label 4, so the unmasked
// token labels read in order reproduce the word label sequence exactly.

#include <cstddef>
#include <string>
#include <vector>

#include "marking/error.hpp"
#include "marking/esnli.hpp"
#include "marking/labels.hpp"
#include "marking/tokenizer.hpp"

namespace marking {

inline constexpr int kSpecialWord = -1;

struct AlignedExample {
    std::vector<int> token_ids;
    std::vector<int> word_of_token;   // index into the word-label sequence, or kSpecialWord
    std::vector<bool> loss_mask;      // true = excluded from loss and metrics
    std::vector<LabelId> token_labels;
    std::size_t n_words = 0;          // premise + separator + hypothesis positions
};

inline AlignedExample project_to_tokens(const WordLabeledPair& pair, const Tokenizer& tokenizer,
                                        std::size_t max_len = 512) {
    AlignedExample ex;
    ex.n_words = pair.labels.size();

    auto push = [&](int id, LabelId label, bool masked, int word) {
        ex.token_ids.push_back(id);
        ex.token_labels.push_back(label);
        ex.loss_mask.push_back(masked);
        ex.word_of_token.push_back(word);
    };

    push(Tokenizer::kBosId, kNone, true, kSpecialWord);
    auto push_word = [&](const std::string& word, std::size_t word_pos) {
        auto pieces = tokenizer.encode_word(word);
        for (std::size_t k = 0; k < pieces.size(); ++k)
            push(pieces[k].id, k == 0 ? pair.labels[word_pos] : kNone, k != 0, int(word_pos));
    };
    for (std::size_t w = 0; w < pair.premise_words.size(); ++w) push_word(pair.premise_words[w], w);
    push(Tokenizer::kSepId, kSeparator, false, int(pair.separator_pos()));
    std::size_t hyp_base = pair.separator_pos() + 1;
    for (std::size_t w = 0; w < pair.hypothesis_words.size(); ++w)
        push_word(pair.hypothesis_words[w], hyp_base + w);
    push(Tokenizer::kEosId, kNone, true, kSpecialWord);

    if (ex.token_ids.size() > max_len)
        throw Error(Errc::too_long, "sequence of " + std::to_string(ex.token_ids.size()) +
                                        " tokens exceeds the model limit of " + std::to_string(max_len));
    return ex;
}

// Per-word probability rows from the first subword of each word (and the
// separator token for the separator position), in word-label order.
inline std::vector<std::vector<float>> backproject_to_words(
    const std::vector<std::vector<float>>& token_probs, const AlignedExample& alignment) {
    if (token_probs.size() != alignment.token_ids.size())
        throw Error(Errc::alignment_mismatch,
                    "got " + std::to_string(token_probs.size()) + " probability rows for " +
                        std::to_string(alignment.token_ids.size()) + " tokens");
    std::vector<std::vector<float>> out(alignment.n_words);
    for (std::size_t t = 0; t < token_probs.size(); ++t) {
        if (alignment.loss_mask[t] || alignment.word_of_token[t] == kSpecialWord) continue;
        std::size_t w = std::size_t(alignment.word_of_token[t]);
        if (w >= out.size()) throw Error(Errc::alignment_mismatch, "word index out of range");
        out[w] = token_probs[t];
    }
    for (std::size_t w = 0; w < out.size(); ++w)
        if (out[w].empty())
            throw Error(Errc::alignment_mismatch, "word " + std::to_string(w) + " has no labeled token");
    return out;
}

}  // namespace marking
