#pragma once

#include <memory>
#include <string>
#include <string_view>

#include "cppf/dataset.hpp"
#include "cppf/llm_client.hpp"
#include "cppf/paraphrase.hpp"

namespace cppf {

enum class Pivot { kArabic, kFrench, kGerman, kChinese, kHindi };

// "AR", "FR", "DE", "ZH", "HI" (case-insensitive).
Pivot parse_pivot(std::string_view code);
std::string_view pivot_code(Pivot p);
std::string_view pivot_language(Pivot p);
AugMethod pivot_method(Pivot p);

class TranslationClient {
 public:
  virtual ~TranslationClient() = default;
  // Languages are given by name ("English", "Chinese", ...).
  virtual std::string translate(const std::string& text, std::string_view source_language,
                                std::string_view target_language) = 0;
  virtual std::string endpoint() const = 0;
};

/// Translation through a completion endpoint: each call renders a
/// translation prompt and keeps the first cleaned line of the answer.
/// Wrapping a ReplayClient gives offline, fixture-backed translation.
class LlmTranslationClient : public TranslationClient {
 public:
  explicit LlmTranslationClient(std::shared_ptr<LlmClient> llm, int max_attempts = 3)
      : llm_(std::move(llm)), max_attempts_(max_attempts) {}

  static std::string translation_prompt(const std::string& text, std::string_view source_language,
                                        std::string_view target_language);

  std::string translate(const std::string& text, std::string_view source_language,
                        std::string_view target_language) override;
  std::string endpoint() const override { return llm_->endpoint(); }

 private:
  std::shared_ptr<LlmClient> llm_;
  int max_attempts_;
};

// English -> pivot -> English.
std::string back_translate(TranslationClient& client, const std::string& text, Pivot pivot);

AugmentationRecord back_translate_example(TranslationClient& client, const LabeledExample& example,
                                          Pivot pivot);

}  // namespace cppf
