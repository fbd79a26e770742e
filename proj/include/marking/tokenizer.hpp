#pragma once

// Deterministic subword tokenizers with hashed vocabularies. All of them
// recover word boundaries exactly, which token alignment relies on.

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "marking/error.hpp"

namespace marking {

struct Subword {
    std::string piece;
    int id;
};

class Tokenizer {
public:
    static constexpr int kPadId = 0;
    static constexpr int kBosId = 1;
    static constexpr int kEosId = 2;
    static constexpr int kSepId = 3;
    static constexpr int kFirstPieceId = 4;

    virtual ~Tokenizer() = default;
    virtual std::vector<Subword> encode_word(const std::string& word) const = 0;
    virtual int vocab_size() const = 0;
    virtual std::string name() const = 0;

protected:
    int piece_id(const std::string& piece) const {
        // FNV-1a 64
        std::uint64_t h = 1469598103934665603ull;
        for (unsigned char c : piece) {
            h ^= c;
            h *= 1099511628211ull;
        }
        int span = vocab_size() - kFirstPieceId;
        return kFirstPieceId + int(h % std::uint64_t(span));
    }
};

// One piece per word.
class WholeWordTokenizer : public Tokenizer {
public:
    explicit WholeWordTokenizer(int vocab = 8192) : vocab_(vocab) {}
    std::vector<Subword> encode_word(const std::string& word) const override {
        return {Subword{word, piece_id(word)}};
    }
    int vocab_size() const override { return vocab_; }
    std::string name() const override { return "word"; }

private:
    int vocab_;
};

// Fixed-width chunks of at most `width` characters.
class ChunkTokenizer : public Tokenizer {
public:
    explicit ChunkTokenizer(std::size_t width, int vocab = 8192) : width_(width), vocab_(vocab) {}
    std::vector<Subword> encode_word(const std::string& word) const override {
        std::vector<Subword> out;
        for (std::size_t i = 0; i < word.size(); i += width_) {
            std::string piece = word.substr(i, width_);
            if (i > 0) piece = "##" + piece;
            out.push_back(Subword{piece, piece_id(piece)});
        }
        if (out.empty()) out.push_back(Subword{word, piece_id(word)});
        return out;
    }
    int vocab_size() const override { return vocab_; }
    std::string name() const override { return "chunk" + std::to_string(width_); }

private:
    std::size_t width_;
    int vocab_;
};

// Splits a common English suffix off as a continuation piece.
class SuffixTokenizer : public Tokenizer {
public:
    explicit SuffixTokenizer(int vocab = 8192) : vocab_(vocab) {}
    std::vector<Subword> encode_word(const std::string& word) const override {
        static const char* suffixes[] = {"tion", "ment", "ness", "ing", "ed", "ly", "es", "s"};
        for (const char* suf : suffixes) {
            std::size_t n = std::string(suf).size();
            if (word.size() > n + 2 && word.compare(word.size() - n, n, suf) == 0) {
                std::string stem = word.substr(0, word.size() - n);
                std::string cont = "##" + std::string(suf);
                return {Subword{stem, piece_id(stem)}, Subword{cont, piece_id(cont)}};
            }
        }
        return {Subword{word, piece_id(word)}};
    }
    int vocab_size() const override { return vocab_; }
    std::string name() const override { return "suffix"; }

private:
    int vocab_;
};

inline std::shared_ptr<Tokenizer> make_tokenizer(const std::string& name, int vocab = 8192) {
    if (name == "word") return std::make_shared<WholeWordTokenizer>(vocab);
    if (name == "suffix") return std::make_shared<SuffixTokenizer>(vocab);
    if (name.rfind("chunk", 0) == 0) {
        std::size_t width = std::stoul(name.substr(5));
        return std::make_shared<ChunkTokenizer>(width, vocab);
    }
    throw Error(Errc::unknown_encoder, "unknown tokenizer '" + name + "'");
}

}  // namespace marking
