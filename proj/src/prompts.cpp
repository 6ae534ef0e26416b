#include "safelens/prompts.hpp"

#include <array>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <optional>

#include "safelens/error.hpp"

namespace safelens {
namespace {

struct PolicyBlock {
  Category category;
  std::string_view core_value;
  std::vector<std::string_view> rules;
};

const std::vector<std::string_view> kSexualRules = {
    "[BLOCKED] Content involving sexual exploitation or abuse of minors, including child sexual "
    "abuse imagery, should be flagged.",
    "[BLOCKED] Content containing pornography or sexually explicit material primarily intended "
    "for arousal should be flagged.",
    "[BLOCKED] Content promoting sexual services and sexual implications should be flagged.",
    "[ALLOWED] Non-sexual contexts (e.g. breastfeeding, art), dancing, gymnastics, live "
    "performances, and sports are allowed.",
};

// The baseline prompt phrases the harassment rules as prohibitions.
const std::vector<std::string_view> kAbuseRulesBaseline = {
    "[BLOCKED] No bullying, harassment including sexual, animal, child abuse, cyberbullying, and "
    "campus bullying.",
    "[BLOCKED] No sharing others' private info or images of them in private spaces without "
    "consent.",
    "[BLOCKED] No potential abuse and cruelty to animals, child, and students including speech "
    "and actions.",
};

const std::vector<std::string_view> kAbuseRules = {
    "[BLOCKED] Bullying, harassment including sexual, animal, child abuse, cyberbullying, and "
    "campus bullying.",
    "[BLOCKED] Sharing others' private info or images of them in private spaces without consent.",
    "[BLOCKED] Potential abuse and cruelty to animals, child, and students including speech and "
    "actions.",
};

const std::vector<std::string_view> kViolenceRules = {
    "[BLOCKED] Content involving violence, dangerous behavior such as fighting, shooting, "
    "vandalism, assault that result in injury or destruction of property.",
    "[BLOCKED] Content intending to cause harm or violence to the audience or other people should "
    "be flagged.",
    "[BLOCKED] Content depicting graphic violence, or dangerous activities that could incite harm "
    "or violence should be flagged.",
};

const std::vector<std::string_view> kMisinfoRules = {
    "[BLOCKED] Content spreading false information that causes harm or is malicious, such as "
    "denying the existence of tragic events, unsubstantiated medical claims.",
    "[BLOCKED] Content spreading misinformation, out-of-date facts, alternation of videos, "
    "AI-generated content, or other false information should be flagged.",
    "[BLOCKED] Content that involve individuals acting to deceive or manipulate others, such as "
    "impersonation, false identity, or false claims, should be flagged.",
};

const std::vector<std::string_view> kIllegalRules = {
    "[BLOCKED] Content promoting illegal activity like selling drugs, weapons, or exploitation "
    "should be flagged.",
    "[BLOCKED] Content containing unauthorized promotion of regulated goods like gambling, "
    "alcohol, or tobacco should be flagged.",
    "[BLOCKED] Content involving regulated activities such as arson, explosion, robbery, "
    "shoplifting should be flagged.",
    "[BLOCKED] Content involving war scenes, military actions, terrorism actions, heresy "
    "activities should be flagged.",
};

const std::vector<std::string_view> kExtremeRules = {
    "[BLOCKED] Content involving extremely disturbing content, such as torture, gore, "
    "mutilation, or self-harm, should be flagged.",
    "[BLOCKED] Content inciting anti-social, depression, self-harm, or suicide should be "
    "flagged.",
};

PolicyBlock block_for(Category c, bool baseline_wording) {
  switch (c) {
    case Category::sexual:
      return {c,
              "Protect users, especially minors, from sexual exploitation and unwanted exposure "
              "to sexually explicit content.",
              kSexualRules};
    case Category::abuse:
      return {c,
              "Foster a safe and respectful environment where users are protected from "
              "harassment, intimidation, and privacy violations.",
              baseline_wording ? kAbuseRulesBaseline : kAbuseRules};
    case Category::violence:
      return {c,
              "Prevent the promotion and glorification of violence, self-harm, and dangerous "
              "activities to ensure user safety.",
              kViolenceRules};
    case Category::misinfo:
      return {c,
              "Maintain a trustworthy platform by combating the spread of false information, "
              "deception, and fraudulent activities.",
              kMisinfoRules};
    case Category::illegal:
      return {c,
              "Comply with legal requirements and prevent the promotion of illegal activities to "
              "protect users and society at large.",
              kIllegalRules};
    case Category::extreme:
      return {c,
              "Stand against hatred, discrimination, and extremism to create an inclusive "
              "community that respects diversity.",
              kExtremeRules};
    case Category::safe:
      break;
  }
  return {c, "", {}};
}

constexpr std::string_view kIntro =
    "You are a helpful video guardrail model to detect if a video contains unsafe, harmful "
    "content that needs to be moderated.\n\n"
    "As a guardrail model, your tasks are:\n\n";

constexpr std::string_view kRefer = "Refer to the detailed explanations of each category below:\n\n";

constexpr std::array<Category, kNumHarmCategories> kCanonicalHarm = {
    Category::sexual,  Category::abuse,   Category::violence,
    Category::misinfo, Category::illegal, Category::extreme,
};

// Category order used by the deliberation prompt.
constexpr std::array<Category, kNumHarmCategories> kDeliberationOrder = {
    Category::violence, Category::abuse,   Category::misinfo,
    Category::sexual,   Category::illegal, Category::extreme,
};

std::string numbered(Category c) {
  return "C" + std::to_string(ordinal(c) + 1) + ": " + std::string(prompt_alias(c));
}

std::string render_block(Category c, bool numbered_titles) {
  const PolicyBlock b = block_for(c, numbered_titles);
  std::string out = numbered_titles ? numbered(c) : std::string(prompt_alias(c));
  out += ":\nCore Value: ";
  out += b.core_value;
  out += '\n';
  for (auto rule : b.rules) {
    out += rule;
    out += '\n';
  }
  out += '\n';
  return out;
}

std::string bool_schema(std::span<const Category> order) {
  std::string out = "{";
  for (std::size_t i = 0; i < order.size(); ++i) {
    if (i) out += ", ";
    out += '"';
    out += prompt_alias(order[i]);
    out += "\": bool";
  }
  out += '}';
  return out;
}

std::string build_baseline() {
  std::string s(kIntro);
  s += "1. Summarize the content of the video, beginning with \"DESCRIPTION:\".\n\n";
  s += "2. Analyze the video for the presence of the following harmful content categories:\n\n";
  for (std::size_t i = 0; i < kCanonicalHarm.size(); ++i) {
    s += numbered(kCanonicalHarm[i]);
    s += i + 1 < kCanonicalHarm.size() ? "; " : ".\n\n";
  }
  s += kRefer;
  for (Category c : kCanonicalHarm) s += render_block(c, true);
  s += "Provide the moderation result in the following JSON format:\n\n";
  s += "GUARDRAIL = {\n";
  for (std::size_t i = 0; i < kCanonicalHarm.size(); ++i) {
    const Category c = kCanonicalHarm[i];
    s += "    \"C" + std::to_string(ordinal(c) + 1) + "(" + std::string(prompt_alias(c)) +
         ")\": boolean";
    s += i + 1 < kCanonicalHarm.size() ? ",\n" : "\n";
  }
  s += "}\n\n";
  s += "Set the value to true ONLY for the most relevant category found in the video. If no "
       "harmful content is detected, set all values to false.\n\n";
  s += "The first line must be the summarization of the content of the video, beginning with "
       "DESCRIPTION:\n\n";
  s += "The second line must be the JSON format of \"GUARDRAIL\", beginning with GUARDRAIL:\n\n";
  s += "For each category flagged as true, provide a brief explanation of why it was flagged and "
       "list the specific policy violations within that category in the third line, beginning "
       "with EXPLANATION:\n\n";
  s += "If the video is unsafe, select only one category and set that value to true. Do not "
       "select multiple categories for a single video.\n";
  return s;
}

std::string category_list(std::span<const Category> order) {
  std::string s;
  for (std::size_t i = 0; i < order.size(); ++i) {
    s += prompt_alias(order[i]);
    s += i + 1 < order.size() ? "; " : ".\n\n";
  }
  return s;
}

std::string build_s1() {
  std::string s(kIntro);
  s += "Analyze the video for the presence of the following harmful content categories:\n\n";
  s += category_list(kCanonicalHarm);
  s += kRefer;
  for (Category c : kCanonicalHarm) s += render_block(c, false);
  s += "Provide the moderation result in the following format (GUARDRAIL IN JSON):\n\n";
  s += "---\nGUARDRAIL: " + bool_schema(kCanonicalHarm) + "\n---\n\n";
  s += "Set the value to true ONLY for the most relevant categories found in the video.\n\n";
  s += "The reply must be in the JSON format of \"GUARDRAIL\", beginning with GUARDRAIL:\n";
  return s;
}

std::string build_s2() {
  std::string s(kIntro);
  s += "Analyze the video for the presence of the following harmful content categories:\n\n";
  s += category_list(kDeliberationOrder);
  s += kRefer;
  for (Category c : kDeliberationOrder) s += render_block(c, false);
  s += "Provide the moderation result in the following format (GUARDRAIL IN JSON):\n\n";
  s += "---\n";
  s += "DESCRIPTION: <short description of the video>\n\n";
  s += "EXPLANATION: <overall explanation of the video in terms of safety>\n\n";
  s += "GUARDRAIL: " + bool_schema(kDeliberationOrder) + "\n---\n\n";
  s += "Set the value to true ONLY for the most relevant categories found in the video. If no "
       "harmful content is detected, return {}.\n\n";
  s += "The first line must be the summarization of the content of the video, beginning with "
       "DESCRIPTION:\n\n";
  s += "In second line, for each category flagged as true, provide a brief explanation of why it "
       "was flagged and list the specific policy violations within that category in the third "
       "line, beginning with EXPLANATION:\n\n";
  s += "The last line must be the JSON format of \"GUARDRAIL\", beginning with GUARDRAIL:\n\n";
  s += "For convenience, a frame-level description of the video is provided below for your "
       "analysis.\n\n";
  s += kFramesPlaceholder;
  s += "\nYou are provided with multiclass confidence scores (higher values mean more likely). "
       "Consider them as helpful signals, but make the final classification by evaluating all "
       "available information in the input and the scores together.\n\n";
  s += kConfidencePlaceholder;
  return s;
}

std::string escape_caption(std::string_view caption) {
  std::string out;
  out.reserve(caption.size());
  for (char c : caption) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      default: out += c;
    }
  }
  return out;
}

// ---- response parsing ----

constexpr std::string_view kSpace = " \t\r\f\v";

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(kSpace);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(kSpace);
  return s.substr(b, e - b + 1);
}

bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

std::optional<Category> harm_from_alias(std::string_view key) {
  for (Category c : kCanonicalHarm) {
    if (iequals(key, prompt_alias(c))) return c;
  }
  return std::nullopt;
}

// Accepts "Sexual Content" and "C1(Sexual Content)".
std::optional<Category> resolve_key(std::string_view raw) {
  const std::string_view key = trim(raw);
  if (auto c = harm_from_alias(key)) return c;
  if (key.size() < 4 || (key[0] != 'C' && key[0] != 'c') || key.back() != ')') return std::nullopt;
  std::size_t i = 1;
  std::size_t number = 0;
  while (i < key.size() && std::isdigit(static_cast<unsigned char>(key[i])) && i < 4) {
    number = number * 10 + static_cast<std::size_t>(key[i] - '0');
    ++i;
  }
  if (i == 1) return std::nullopt;
  while (i < key.size() && (key[i] == ' ' || key[i] == '\t')) ++i;
  if (i >= key.size() || key[i] != '(') return std::nullopt;
  const auto inner = harm_from_alias(trim(key.substr(i + 1, key.size() - i - 2)));
  if (!inner || ordinal(*inner) + 1 != number) return std::nullopt;
  return inner;
}

class MapParser {
 public:
  explicit MapParser(std::string_view s) : s_(s) {}

  // Returns an empty string on success.
  std::string parse(GuardrailVerdict::Flags& flags) {
    std::array<std::optional<bool>, kNumHarmCategories> seen{};
    skip_space();
    if (!consume('{')) return "expected '{' after GUARDRAIL:";
    skip_space();
    if (consume('}')) return {};
    while (true) {
      skip_space();
      if (consume('}')) break;  // trailing comma
      std::string key;
      if (auto err = parse_key(key); !err.empty()) return err;
      skip_space();
      if (!consume(':')) return "expected ':' after key \"" + key + "\"";
      skip_space();
      const std::string_view word = parse_word();
      bool value = false;
      if (iequals(word, "true")) {
        value = true;
      } else if (iequals(word, "false")) {
        value = false;
      } else {
        return "non-boolean value for key \"" + key + "\"";
      }
      const auto c = resolve_key(key);
      if (!c) return "unknown category key \"" + key + "\"";
      auto& slot = seen[ordinal(*c)];
      if (slot && *slot != value) return "conflicting duplicate key \"" + key + "\"";
      slot = value;
      skip_space();
      if (consume(',')) continue;
      if (consume('}')) break;
      return "expected ',' or '}' after value of \"" + key + "\"";
    }
    for (std::size_t k = 0; k < kNumHarmCategories; ++k) flags[k] = seen[k].value_or(false);
    return {};
  }

 private:
  void skip_space() {
    while (pos_ < s_.size() && kSpace.find(s_[pos_]) != std::string_view::npos) ++pos_;
  }
  bool consume(char c) {
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }
  std::string parse_key(std::string& key) {
    if (pos_ >= s_.size() || (s_[pos_] != '"' && s_[pos_] != '\'')) {
      return "expected quoted category key";
    }
    const char quote = s_[pos_++];
    while (pos_ < s_.size() && s_[pos_] != quote) {
      if (s_[pos_] == '\\' && pos_ + 1 < s_.size()) ++pos_;
      key += s_[pos_++];
    }
    if (!consume(quote)) return "unterminated category key";
    return {};
  }
  std::string_view parse_word() {
    const std::size_t begin = pos_;
    while (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    return s_.substr(begin, pos_ - begin);
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::optional<std::string_view> after_prefix(std::string_view line, std::string_view prefix) {
  const std::string_view t = trim(line);
  if (!t.starts_with(prefix)) return std::nullopt;
  return trim(t.substr(prefix.size()));
}

}  // namespace

const std::string& render_policy_prompt(PromptVariant variant) {
  static const std::string baseline = build_baseline();
  static const std::string s1 = build_s1();
  static const std::string s2 = build_s2();
  switch (variant) {
    case PromptVariant::baseline: return baseline;
    case PromptVariant::s1: return s1;
    case PromptVariant::s2: return s2;
  }
  return baseline;
}

std::string format_probability(double p) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", p);
  std::string s(buf);
  if (s == "-0.000") s = "0.000";
  while (s.size() > 1 && s.back() == '0' && s[s.size() - 2] != '.') s.pop_back();
  return s;
}

std::string render_frames_section(const std::vector<std::string>& captions) {
  std::string out(kFramesHeader);
  out += '\n';
  for (std::size_t k = 0; k < captions.size(); ++k) {
    out += "Frame-" + std::to_string(k) + ": " + escape_caption(captions[k]) + '\n';
  }
  return out;
}

std::string render_confidence_section(const ProbabilitySimplex& q) {
  std::string out(kConfidenceHeader);
  out += '\n';
  for (Category c : canonical_categories()) {
    out += prompt_alias(c);
    out += ": Probability = ";
    out += format_probability(q[c]);
    out += '\n';
  }
  return out;
}

AugmentedPrompt assemble_augmented_prompt(std::string base, std::vector<std::string> captions,
                                          const ProbabilitySimplex& q) {
  if (captions.empty()) throw DataError("augmented prompt needs at least one frame caption");
  const std::string frames = render_frames_section(captions);
  const std::string confidence = render_confidence_section(q);

  std::string rendered;
  const auto fp = base.find(kFramesPlaceholder);
  const auto cp = base.find(kConfidencePlaceholder);
  if (fp != std::string::npos && cp != std::string::npos && fp < cp) {
    rendered = base.substr(0, fp);
    rendered += frames;
    rendered += base.substr(fp + kFramesPlaceholder.size(), cp - fp - kFramesPlaceholder.size());
    rendered += confidence;
    rendered += base.substr(cp + kConfidencePlaceholder.size());
  } else {
    rendered = base;
    if (!rendered.empty() && rendered.back() != '\n') rendered += '\n';
    rendered += '\n';
    rendered += frames;
    rendered += '\n';
    rendered += confidence;
  }
  return AugmentedPrompt{std::move(base), std::move(captions), q, std::move(rendered)};
}

ParseResult try_parse_guardrail_response(std::string_view text) {
  std::optional<std::string> description;
  std::optional<std::string> explanation;
  std::optional<GuardrailVerdict::Flags> flags;
  std::string first_error;

  std::size_t pos = 0;
  while (pos <= text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    const std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;

    if (!description) {
      if (auto rest = after_prefix(line, "DESCRIPTION:")) {
        description = std::string(*rest);
        continue;
      }
    }
    if (!explanation) {
      if (auto rest = after_prefix(line, "EXPLANATION:")) {
        explanation = std::string(*rest);
        continue;
      }
    }
    if (!flags) {
      if (auto rest = after_prefix(line, "GUARDRAIL:")) {
        GuardrailVerdict::Flags f{};
        MapParser parser(*rest);
        if (auto err = parser.parse(f); err.empty()) {
          flags = f;
        } else if (first_error.empty()) {
          first_error = std::move(err);
        }
      }
    }
  }
  if (!flags) {
    return MalformedResponse{std::string(text),
                             first_error.empty() ? "no GUARDRAIL line" : first_error};
  }
  return GuardrailVerdict(description.value_or(""), explanation.value_or(""), *flags);
}

GuardrailVerdict parse_guardrail_response(std::string_view text) {
  auto result = try_parse_guardrail_response(text);
  if (auto* m = std::get_if<MalformedResponse>(&result)) {
    throw MalformedResponseError(std::move(*m));
  }
  return std::get<GuardrailVerdict>(std::move(result));
}

std::string render_response_skeleton(const GuardrailVerdict& v) {
  std::string out = "DESCRIPTION: " + v.description() + "\n";
  out += "EXPLANATION: " + v.explanation() + "\n";
  out += "GUARDRAIL: {";
  for (std::size_t k = 0; k < kNumHarmCategories; ++k) {
    if (k) out += ", ";
    out += '"';
    out += prompt_alias(kCanonicalHarm[k]);
    out += v.flags()[k] ? "\": true" : "\": false";
  }
  out += "}\n";
  return out;
}

std::string CotRequest::rendered() const {
  std::string out = instruction;
  out += "\n\n";
  out += prompt.rendered;
  if (!out.empty() && out.back() != '\n') out += '\n';
  out += '\n';
  out += kOriginalResponseMarker;
  out += '\n';
  out += original_response;
  return out;
}

CotRequest build_cot_request(const SampleRecord& sample, AugmentedPrompt prompt,
                             std::string original) {
  if (original.empty()) {
    throw DataError("CoT request for '" + sample.id + "' has an empty original response");
  }
  CotRequest r;
  r.sample_id = sample.id;
  r.prompt = std::move(prompt);
  r.original_response = std::move(original);
  r.instruction =
      "Rewrite the original response below for this video. Reason step by step over the "
      "frame-level captions and the initial confidence scores in the prompt, then give the same "
      "final verdict as the original response. Reply with a DESCRIPTION line, an EXPLANATION "
      "line holding the reasoning, and end with the GUARDRAIL line.";
  return r;
}

nlohmann::json to_json(const CotRequest& r) {
  return {
      {"id", r.sample_id},
      {"instruction", r.instruction},
      {"base_prompt", r.prompt.base},
      {"captions", r.prompt.captions},
      {"confidences", r.prompt.confidences.values()},
      {"augmented_prompt", r.prompt.rendered},
      {"original_response", r.original_response},
  };
}

CotRequest cot_request_from_json(const nlohmann::json& j) {
  try {
    CotRequest r;
    r.sample_id = j.at("id").get<std::string>();
    r.instruction = j.at("instruction").get<std::string>();
    r.prompt.base = j.at("base_prompt").get<std::string>();
    r.prompt.captions = j.at("captions").get<std::vector<std::string>>();
    r.prompt.confidences =
        ProbabilitySimplex(j.at("confidences").get<std::array<double, kNumCategories>>());
    r.prompt.rendered = j.at("augmented_prompt").get<std::string>();
    r.original_response = j.at("original_response").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("bad CoT request: ") + e.what());
  }
}

}  // namespace safelens
