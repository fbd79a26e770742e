#pragma once

// Parsing and rendering of the SME span-markup convention:
//   < >  correct      (green)
//   [ ]  incorrect    (red)
//   { }  irrelevant   (yellow)  -- student responses
//   { }  omission     (blue)    -- gold answers
// Delimiters must be balanced and non-nested; the plain text is the markup
// with all six delimiter characters removed.

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "marking/error.hpp"

namespace marking {

enum class SpanKind { correct, incorrect, irrelevant, omission };

inline const char* span_kind_name(SpanKind k) {
    switch (k) {
        case SpanKind::correct: return "correct";
        case SpanKind::incorrect: return "incorrect";
        case SpanKind::irrelevant: return "irrelevant";
        case SpanKind::omission: return "omission";
    }
    return "?";
}

struct MarkedSpan {
    SpanKind kind;
    std::size_t start_word;  // inclusive
    std::size_t end_word;    // exclusive
    std::size_t start_char;  // offsets into the plain (markup-stripped) text
    std::size_t end_char;

    bool operator==(const MarkedSpan&) const = default;
};

// A plain text plus its whitespace word segmentation and labeled spans.
struct SpanAnnotation {
    std::string plain_text;
    std::vector<std::string> words;
    std::vector<std::size_t> word_starts;  // char offset of each word
    std::vector<MarkedSpan> spans;
};

struct ResponseAnnotation : SpanAnnotation {
    double grade = 0.0;  // one of {0, 0.5, 1}
    std::string annotator_id;
    std::optional<std::string> feedback;
};

struct GoldAnnotation : SpanAnnotation {};

enum class RenderStyle { markup, ansi, html };

namespace detail {

inline bool is_open_delim(char c) { return c == '<' || c == '[' || c == '{'; }
inline bool is_close_delim(char c) { return c == '>' || c == ']' || c == '}'; }

inline SpanKind kind_of_open(char c, bool gold) {
    switch (c) {
        case '<': return SpanKind::correct;
        case '[': return SpanKind::incorrect;
        default: return gold ? SpanKind::omission : SpanKind::irrelevant;
    }
}

inline char open_delim(SpanKind k) {
    switch (k) {
        case SpanKind::correct: return '<';
        case SpanKind::incorrect: return '[';
        default: return '{';
    }
}

inline char close_delim(SpanKind k) {
    switch (k) {
        case SpanKind::correct: return '>';
        case SpanKind::incorrect: return ']';
        default: return '}';
    }
}

inline char matching_close(char open) {
    switch (open) {
        case '<': return '>';
        case '[': return ']';
        default: return '}';
    }
}

inline void segment_words(SpanAnnotation& ann) {
    ann.words.clear();
    ann.word_starts.clear();
    const std::string& s = ann.plain_text;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        if (i >= s.size()) break;
        std::size_t start = i;
        while (i < s.size() && !std::isspace(static_cast<unsigned char>(s[i]))) ++i;
        ann.words.push_back(s.substr(start, i - start));
        ann.word_starts.push_back(start);
    }
}

// A word belongs to a span iff the word's start char lies inside it. This
// keeps "at most one span per word" even for spans that split a word.
inline void assign_word_ranges(SpanAnnotation& ann) {
    for (auto& span : ann.spans) {
        std::size_t first = ann.words.size(), last = 0;
        bool any = false;
        for (std::size_t w = 0; w < ann.words.size(); ++w) {
            std::size_t ws = ann.word_starts[w];
            if (span.start_char <= ws && ws < span.end_char) {
                if (!any) first = w;
                last = w + 1;
                any = true;
            }
        }
        if (!any)
            throw Error(Errc::empty_span,
                        "span at char " + std::to_string(span.start_char) + " contains no words");
        span.start_word = first;
        span.end_word = last;
    }
}

// lenient: flatten nesting to the outermost span instead of rejecting it.
inline SpanAnnotation parse_markup(const std::string& markup, bool gold, bool lenient,
                                   std::vector<std::string>* warnings) {
    SpanAnnotation ann;
    std::optional<char> open;          // currently open delimiter char
    std::size_t open_plain_start = 0;  // plain offset where it opened
    std::size_t depth = 0;             // only grows past 1 in lenient mode

    for (std::size_t pos = 0; pos < markup.size(); ++pos) {
        char c = markup[pos];
        if (is_open_delim(c)) {
            if (gold && c != '{')
                throw Error(Errc::unbalanced_delimiter,
                            std::string("delimiter '") + c + "' not allowed in gold markup at position " +
                                std::to_string(pos));
            if (open) {
                if (!lenient)
                    throw Error(Errc::nested_span,
                                std::string("nested '") + c + "' at position " + std::to_string(pos));
                ++depth;
                if (warnings)
                    warnings->push_back("flattened nested '" + std::string(1, c) + "' at position " +
                                        std::to_string(pos));
                continue;
            }
            open = c;
            open_plain_start = ann.plain_text.size();
            depth = 1;
        } else if (is_close_delim(c)) {
            if (gold && c != '}')
                throw Error(Errc::unbalanced_delimiter,
                            std::string("delimiter '") + c + "' not allowed in gold markup at position " +
                                std::to_string(pos));
            if (!open)
                throw Error(Errc::unbalanced_delimiter,
                            std::string("unmatched '") + c + "' at position " + std::to_string(pos));
            if (matching_close(*open) != c) {
                if (!lenient)
                    throw Error(Errc::nested_span, std::string("'") + c + "' at position " +
                                                       std::to_string(pos) + " closes a '" + *open +
                                                       "' span");
                continue;
            }
            if (--depth > 0) continue;
            ann.spans.push_back(MarkedSpan{kind_of_open(*open, gold), 0, 0, open_plain_start,
                                           ann.plain_text.size()});
            open.reset();
        } else {
            ann.plain_text.push_back(c);
        }
    }
    if (open)
        throw Error(Errc::unbalanced_delimiter,
                    std::string("'") + *open + "' never closed (end of input)");

    segment_words(ann);
    assign_word_ranges(ann);
    return ann;
}

inline std::string html_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '&': out += "&amp;"; break;
            case '"': out += "&quot;"; break;
            default: out.push_back(c);
        }
    }
    return out;
}

inline const char* ansi_color(SpanKind k) {
    switch (k) {
        case SpanKind::correct: return "\033[32m";
        case SpanKind::incorrect: return "\033[31m";
        case SpanKind::irrelevant: return "\033[33m";
        case SpanKind::omission: return "\033[34m";
    }
    return "";
}

inline const char* html_color(SpanKind k) {
    switch (k) {
        case SpanKind::correct: return "#1a7f37";
        case SpanKind::incorrect: return "#cf222e";
        case SpanKind::irrelevant: return "#bf8700";
        case SpanKind::omission: return "#0969da";
    }
    return "#000000";
}

}  // namespace detail

inline ResponseAnnotation parse_marked_response(const std::string& markup_text, double grade,
                                                const std::string& annotator_id,
                                                bool lenient = false,
                                                std::vector<std::string>* warnings = nullptr) {
    if (grade != 0.0 && grade != 0.5 && grade != 1.0)
        throw Error(Errc::invalid_grade, "grade must be one of {0, 0.5, 1}, got " + std::to_string(grade));
    ResponseAnnotation ann;
    static_cast<SpanAnnotation&>(ann) = detail::parse_markup(markup_text, /*gold=*/false, lenient, warnings);
    ann.grade = grade;
    ann.annotator_id = annotator_id;
    return ann;
}

inline GoldAnnotation parse_marked_gold(const std::string& markup_text, bool lenient = false,
                                        std::vector<std::string>* warnings = nullptr) {
    GoldAnnotation ann;
    static_cast<SpanAnnotation&>(ann) = detail::parse_markup(markup_text, /*gold=*/true, lenient, warnings);
    return ann;
}

// style=markup is the exact inverse of parsing; ansi/html reproduce the
// green/red/yellow/blue color convention.
inline std::string render_marked(const SpanAnnotation& ann, RenderStyle style = RenderStyle::markup) {
    // Spans sorted by start_char; at equal offsets a close precedes an open.
    std::vector<const MarkedSpan*> by_start;
    for (const auto& s : ann.spans) by_start.push_back(&s);
    std::sort(by_start.begin(), by_start.end(),
              [](const MarkedSpan* a, const MarkedSpan* b) { return a->start_char < b->start_char; });

    std::string out;
    std::size_t next = 0;
    const MarkedSpan* open = nullptr;
    for (std::size_t pos = 0; pos <= ann.plain_text.size(); ++pos) {
        if (open && open->end_char == pos) {
            switch (style) {
                case RenderStyle::markup: out.push_back(detail::close_delim(open->kind)); break;
                case RenderStyle::ansi: out += "\033[0m"; break;
                case RenderStyle::html: out += "</span>"; break;
            }
            open = nullptr;
        }
        if (next < by_start.size() && by_start[next]->start_char == pos) {
            open = by_start[next++];
            switch (style) {
                case RenderStyle::markup: out.push_back(detail::open_delim(open->kind)); break;
                case RenderStyle::ansi: out += detail::ansi_color(open->kind); break;
                case RenderStyle::html:
                    out += std::string("<span class=\"") + span_kind_name(open->kind) +
                           "\" style=\"color:" + detail::html_color(open->kind) + "\">";
                    break;
            }
        }
        if (pos < ann.plain_text.size()) {
            char c = ann.plain_text[pos];
            if (style == RenderStyle::html) {
                std::string esc = detail::html_escape(std::string(1, c));
                out += esc;
            } else {
                out.push_back(c);
            }
        }
    }
    return out;
}

}  // namespace marking
