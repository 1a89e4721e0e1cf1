#include "cppf/back_translation.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "cppf/error.hpp"

namespace cppf {

namespace {

struct PivotInfo {
  Pivot pivot;
  std::string_view code;
  std::string_view language;
  AugMethod method;
};

constexpr std::array<PivotInfo, 5> kPivots = {{
    {Pivot::kArabic, "AR", "Arabic", AugMethod::kBtAr},
    {Pivot::kFrench, "FR", "French", AugMethod::kBtFr},
    {Pivot::kGerman, "DE", "German", AugMethod::kBtDe},
    {Pivot::kChinese, "ZH", "Chinese", AugMethod::kBtZh},
    {Pivot::kHindi, "HI", "Hindi", AugMethod::kBtHi},
}};

const PivotInfo& info(Pivot p) {
  return *std::find_if(kPivots.begin(), kPivots.end(),
                       [p](const PivotInfo& i) { return i.pivot == p; });
}

constexpr std::string_view kSourceLanguage = "English";

}  // namespace

Pivot parse_pivot(std::string_view code) {
  std::string upper(code);
  for (auto& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  for (const auto& i : kPivots) {
    if (i.code == upper) return i.pivot;
  }
  throw ConfigError("unsupported pivot language '" + std::string(code) +
                    "' (expected AR, FR, DE, ZH or HI)");
}

std::string_view pivot_code(Pivot p) { return info(p).code; }
std::string_view pivot_language(Pivot p) { return info(p).language; }
AugMethod pivot_method(Pivot p) { return info(p).method; }

std::string LlmTranslationClient::translation_prompt(const std::string& text,
                                                     std::string_view source_language,
                                                     std::string_view target_language) {
  std::string out = "Translate the following ";
  out += source_language;
  out += " text to ";
  out += target_language;
  out += ".\n";
  out += source_language;
  out += ": ";
  out += text;
  out += '\n';
  out += target_language;
  out += ':';
  return out;
}

std::string LlmTranslationClient::translate(const std::string& text,
                                            std::string_view source_language,
                                            std::string_view target_language) {
  const auto prompt = translation_prompt(text, source_language, target_language);
  auto out = clean_completion(complete_with_retries(*llm_, prompt, max_attempts_));
  if (out.empty()) throw Error("empty translation for prompt digest " + prompt_digest(prompt));
  return out;
}

std::string back_translate(TranslationClient& client, const std::string& text, Pivot pivot) {
  if (text.empty()) throw DataError("back-translation input is empty");
  const auto pivot_text = client.translate(text, kSourceLanguage, pivot_language(pivot));
  return client.translate(pivot_text, pivot_language(pivot), kSourceLanguage);
}

AugmentationRecord back_translate_example(TranslationClient& client, const LabeledExample& example,
                                          Pivot pivot) {
  AugmentationRecord r;
  r.original_id = example.id;
  r.original_text = example.sentence1;
  r.augmented_text = back_translate(client, example.sentence1, pivot);
  r.method = pivot_method(pivot);
  r.meta["endpoint"] = client.endpoint();
  r.meta["pivot"] = std::string(pivot_code(pivot));
  return r;
}

}  // namespace cppf
