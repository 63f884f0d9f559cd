#include "kgdd/normalize.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <unordered_map>

#include "kgdd/error.hpp"
#include "kgdd/text.hpp"

namespace kgdd {

namespace cleaners {

namespace {

bool is_ascii_punct(char32_t c) {
    return (c >= 0x21 && c <= 0x2F) || (c >= 0x3A && c <= 0x40) || (c >= 0x5B && c <= 0x60) ||
           (c >= 0x7B && c <= 0x7E);
}

bool is_latin1_punct(char32_t c) {
    return (c >= 0xA1 && c <= 0xBF && c != 0xAA && c != 0xB2 && c != 0xB3 && c != 0xB5 &&
            c != 0xB9 && c != 0xBA) ||
           c == 0xD7 || c == 0xF7 || (c >= 0x2010 && c <= 0x2027);
}

std::string_view accent_base(char32_t c) {
    // Latin-1 supplement letters U+00C0..U+00FF.
    static constexpr std::array<std::string_view, 64> table = {
        "A", "A", "A", "A", "A", "A", "AE", "C", "E", "E", "E",  "E", "I", "I", "I", "I",
        "D", "N", "O", "O", "O", "O", "O",  "",  "O", "U", "U",  "U", "U", "Y", "TH", "ss",
        "a", "a", "a", "a", "a", "a", "ae", "c", "e", "e", "e",  "e", "i", "i", "i", "i",
        "d", "n", "o", "o", "o", "o", "o",  "",  "o", "u", "u",  "u", "u", "y", "th", "y"};
    if (c < 0xC0 || c > 0xFF || c == 0xD7 || c == 0xF7) return {};
    return table[c - 0xC0];
}

std::string ascii_lower(std::string_view s) {
    std::string out(s);
    for (auto& ch : out) {
        if (ch >= 'A' && ch <= 'Z') ch = static_cast<char>(ch - 'A' + 'a');
    }
    return out;
}

}  // namespace

std::string strip_punctuation(std::string_view s) {
    std::u32string out;
    for (char32_t c : text::decode_utf8(s)) {
        if (!is_ascii_punct(c) && !is_latin1_punct(c)) out.push_back(c);
    }
    return text::encode_utf8(out);
}

std::string strip_accents(std::string_view s) {
    std::string out;
    for (char32_t c : text::decode_utf8(s)) {
        const auto base = accent_base(c);
        if (!base.empty()) {
            out.append(base);
        } else {
            out.append(text::encode_utf8(std::u32string_view(&c, 1)));
        }
    }
    return out;
}

std::string digits_only(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c >= '0' && c <= '9') out.push_back(c);
    }
    return out;
}

std::string phone_normalize(std::string_view s) {
    const std::string t = text::trim(s);
    std::string out;
    if (!t.empty() && t.front() == '+') out = "00";
    out += digits_only(t);
    return out;
}

std::string ordinal_to_digit(std::string_view s) {
    static const std::unordered_map<std::string, std::string> words = {
        {"one", "1"},       {"two", "2"},       {"three", "3"},     {"four", "4"},
        {"five", "5"},      {"six", "6"},       {"seven", "7"},     {"eight", "8"},
        {"nine", "9"},      {"ten", "10"},      {"eleven", "11"},   {"twelve", "12"},
        {"thirteen", "13"}, {"fourteen", "14"}, {"fifteen", "15"},  {"sixteen", "16"},
        {"seventeen", "17"}, {"eighteen", "18"}, {"nineteen", "19"}, {"twenty", "20"}};
    auto toks = text::tokens(s);
    for (auto& tok : toks) {
        // Keep trailing punctuation such as "Eleven," attached to the digit.
        std::size_t end = tok.size();
        while (end > 0 && std::string_view(",.;:").find(tok[end - 1]) != std::string_view::npos) {
            --end;
        }
        const auto it = words.find(ascii_lower(std::string_view(tok).substr(0, end)));
        if (it != words.end()) tok = it->second + tok.substr(end);
    }
    return text::join(toks, " ");
}

std::string address_token_reorder(std::string_view s) {
    auto toks = text::tokens(s);
    std::size_t lead = 0;
    while (lead < toks.size() && text::starts_with_digit(toks[lead])) ++lead;
    if (lead == 0 || lead == toks.size()) return text::join(toks, " ");
    std::vector<std::string> out(toks.begin() + static_cast<std::ptrdiff_t>(lead), toks.end());
    out.insert(out.end(), toks.begin(), toks.begin() + static_cast<std::ptrdiff_t>(lead));
    return text::join(out, " ");
}

std::string expand_abbreviations(std::string_view s) {
    static const std::unordered_map<std::string, std::string> table = {
        {"str.", "Strasse"}, {"str", "Strasse"}, {"st.", "Street"},  {"rd.", "Road"},
        {"ave.", "Avenue"},  {"pl.", "Platz"},   {"nr.", "Nummer"}, {"no.", "Number"}};
    auto toks = text::tokens(s);
    for (auto& tok : toks) {
        const auto it = table.find(ascii_lower(tok));
        if (it != table.end()) tok = it->second;
    }
    return text::join(toks, " ");
}

std::string token_sort(std::string_view s) {
    auto toks = text::tokens(s);
    std::sort(toks.begin(), toks.end());
    return text::join(toks, " ");
}

std::string strip_country_suffix(std::string_view s) {
    std::string out = text::trim(s);
    for (;;) {
        const auto comma = out.rfind(',');
        if (comma == std::string::npos) break;
        const std::string tail = text::trim(std::string_view(out).substr(comma + 1));
        const bool code = tail.size() == 2 && std::isupper(static_cast<unsigned char>(tail[0])) &&
                          std::isupper(static_cast<unsigned char>(tail[1]));
        if (!code) break;
        out = text::trim(std::string_view(out).substr(0, comma));
    }
    return out;
}

std::string url_normalize(std::string_view s) {
    std::string out = ascii_lower(s);
    // Repeat until stable so that the cleaner is idempotent on odd input
    // such as "www.www.x" or "http://http://x".
    for (std::string prev; prev != out;) {
        prev = out;
        out = text::trim(out);
        for (std::string_view prefix : {"https://", "http://", "www."}) {
            if (out.rfind(prefix, 0) == 0) out.erase(0, prefix.size());
        }
        while (!out.empty() && out.back() == '/') out.pop_back();
    }
    return out;
}

}  // namespace cleaners

namespace {

using Values = std::vector<PropertyValue>;
using Fn = std::function<Values(Values)>;
using Params = std::map<std::string, std::string>;

bool is_textual(const PropertyValue& v) {
    return v.kind() == ValueKind::text || v.kind() == ValueKind::url;
}

// Lifts a string transform to a per-value cleaner over text and url values.
// Other kinds pass through; an empty result scrubs the value.
Fn per_text(std::string (*f)(std::string_view)) {
    return [f](Values in) {
        Values out;
        out.reserve(in.size());
        for (auto& v : in) {
            if (!is_textual(v)) {
                out.push_back(std::move(v));
                continue;
            }
            std::string cleaned = f(v.raw());
            if (!cleaned.empty()) out.push_back(v.with_raw(std::move(cleaned)));
        }
        return out;
    };
}

std::string do_lower(std::string_view s) { return text::to_lower(s); }
std::string do_upper(std::string_view s) { return text::to_upper(s); }
std::string do_trim(std::string_view s) { return text::trim(s); }
std::string do_collapse(std::string_view s) { return text::collapse_whitespace(s); }

std::string null_scrub(std::string_view s) {
    static const std::array<std::string_view, 9> markers = {
        "null", "nil", "none", "n/a", "na", "-", "unknown", "?", "undefined"};
    const std::string t = text::to_lower(text::trim(s));
    for (auto m : markers) {
        if (t == m) return {};
    }
    return std::string(s);
}

Values number_parse(Values in) {
    Values out;
    for (auto& v : in) {
        if (v.kind() != ValueKind::text) {
            out.push_back(std::move(v));
            continue;
        }
        try {
            out.push_back(PropertyValue::number(v.raw(), v.provenance(), v.quality()));
        } catch (const ValidationError&) {
            // Unparseable numbers are scrubbed.
        }
    }
    return out;
}

Values geo_sentinel_scrub(Values in) {
    Values out;
    for (auto& v : in) {
        if (v.kind() == ValueKind::geopoint && v.as_geo().lat == 0.0 && v.as_geo().lon == 0.0) {
            continue;
        }
        out.push_back(std::move(v));
    }
    return out;
}

std::string param(const Params& p, const std::string& key, std::string fallback) {
    const auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

Fn alias_concat(const Params& p) {
    const std::string sep = param(p, "separator", "; ");
    if (sep.empty()) throw ConfigError("alias-concat: separator must not be empty");
    return [sep](Values in) {
        std::vector<std::string> parts;
        Values rest;
        std::optional<PropertyValue> first;
        for (auto& v : in) {
            if (!is_textual(v)) {
                rest.push_back(std::move(v));
                continue;
            }
            if (!first) first = v;
            parts.push_back(v.raw());
        }
        Values out;
        if (first) out.push_back(first->with_raw(text::join(parts, sep)));
        for (auto& v : rest) out.push_back(std::move(v));
        return out;
    };
}

Fn alias_split(const Params& p) {
    const std::string sep = param(p, "separator", ";");
    if (sep.empty()) throw ConfigError("alias-split: separator must not be empty");
    return [sep](Values in) {
        Values out;
        for (auto& v : in) {
            if (!is_textual(v)) {
                out.push_back(std::move(v));
                continue;
            }
            std::string_view rest = v.raw();
            for (;;) {
                const auto pos = rest.find(sep);
                std::string piece = text::trim(rest.substr(0, pos));
                if (!piece.empty()) out.push_back(v.with_raw(std::move(piece)));
                if (pos == std::string_view::npos) break;
                rest.remove_prefix(pos + sep.size());
            }
        }
        return out;
    };
}

using Factory = std::function<Fn(const Params&)>;

Factory simple(Fn fn) {
    return [fn](const Params& p) {
        if (!p.empty()) throw ConfigError("cleaner takes no parameters");
        return fn;
    };
}

const std::map<std::string, Factory>& registry() {
    static const std::map<std::string, Factory> r = {
        {"lowercase", simple(per_text(do_lower))},
        {"uppercase", simple(per_text(do_upper))},
        {"trim", simple(per_text(do_trim))},
        {"collapse-whitespace", simple(per_text(do_collapse))},
        {"strip-punctuation", simple(per_text(cleaners::strip_punctuation))},
        {"strip-accents", simple(per_text(cleaners::strip_accents))},
        {"digits-only", simple(per_text(cleaners::digits_only))},
        {"phone-normalize", simple(per_text(cleaners::phone_normalize))},
        {"number-parse", simple(number_parse)},
        {"ordinal-to-digit", simple(per_text(cleaners::ordinal_to_digit))},
        {"address-token-reorder", simple(per_text(cleaners::address_token_reorder))},
        {"expand-abbreviations", simple(per_text(cleaners::expand_abbreviations))},
        {"token-sort", simple(per_text(cleaners::token_sort))},
        {"strip-country-suffix", simple(per_text(cleaners::strip_country_suffix))},
        {"geo-sentinel-scrub", simple(geo_sentinel_scrub)},
        {"null-scrub", simple(per_text(null_scrub))},
        {"url-normalize", simple(per_text(cleaners::url_normalize))},
        {"alias-concat", alias_concat},
        {"alias-split", alias_split},
    };
    return r;
}

}  // namespace

CleanerChain CleanerChain::build(std::vector<CleanerStep> steps) {
    CleanerChain chain;
    for (const auto& step : steps) {
        const auto it = registry().find(step.name);
        if (it == registry().end()) throw ConfigError("unknown cleaner '" + step.name + "'");
        try {
            chain.fns_.push_back(it->second(step.params));
        } catch (const ConfigError& e) {
            throw ConfigError(step.name + ": " + e.what());
        }
    }
    chain.steps_ = std::move(steps);
    return chain;
}

CleanerChain CleanerChain::build(std::initializer_list<std::string_view> names) {
    std::vector<CleanerStep> steps;
    for (auto n : names) steps.push_back({std::string(n), {}});
    return build(std::move(steps));
}

std::vector<PropertyValue> CleanerChain::apply(std::vector<PropertyValue> values) const {
    for (const auto& fn : fns_) values = fn(std::move(values));
    return values;
}

std::optional<PropertyValue> clean(const PropertyValue& value, const CleanerChain& chain) {
    auto out = chain.apply({value});
    if (out.empty()) return std::nullopt;
    return std::move(out.front());
}

std::vector<PropertyValue> clean_values(std::span<const PropertyValue> values,
                                        const CleanerChain& chain) {
    return chain.apply(std::vector<PropertyValue>(values.begin(), values.end()));
}

std::vector<std::string> registered_cleaners() {
    std::vector<std::string> names;
    for (const auto& [name, factory] : registry()) names.push_back(name);
    return names;
}

}  // namespace kgdd
