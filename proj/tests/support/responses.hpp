#pragma once

// Reasoner replies with known verdicts, in both key styles, and replies that
// must be rejected.

#include <string>
#include <vector>

#include "safelens/category.hpp"

namespace responses {

using safelens::Category;

struct WellFormed {
  std::string text;
  Category expected;
};

inline std::vector<WellFormed> well_formed() {
  using C = Category;
  return {
      {"DESCRIPTION: A beach.\nEXPLANATION: Nothing harmful.\nGUARDRAIL: {\"Sexual Content\": "
       "false, \"Harassment & Bullying\": false, \"Threats, Violence & Harm\": false, \"False & "
       "Deceptive Information\": false, \"Illegal/Regulated Activities\": false, \"Hateful "
       "Content & Extremism\": false}",
       C::safe},
      {"GUARDRAIL: {\"Sexual Content\": true}", C::sexual},
      {"GUARDRAIL: {\"Harassment & Bullying\": true, \"Sexual Content\": false}", C::abuse},
      {"DESCRIPTION: x\nGUARDRAIL: {\"Threats, Violence & Harm\": TRUE}", C::violence},
      {"GUARDRAIL: {\"False & Deceptive Information\": True,}", C::misinfo},
      {"---\nGUARDRAIL: {\"Illegal/Regulated Activities\": true}\n---", C::illegal},
      {"GUARDRAIL: {'Hateful Content & Extremism': true}", C::extreme},
      {"GUARDRAIL: {}", C::safe},
      {"Some preamble.\n  GUARDRAIL:   {  \"sexual content\" :true }  ", C::sexual},
      {"GUARDRAIL: {\"Threats, Violence & Harm\": true, \"Harassment & Bullying\": true}",
       C::abuse},
      {"DESCRIPTION: d\nEXPLANATION: e\nGUARDRAIL: {\"C1(Sexual Content)\": false, "
       "\"C2(Harassment & Bullying)\": false, \"C3(Threats, Violence & Harm)\": true, "
       "\"C4(False & Deceptive Information)\": false, \"C5(Illegal/Regulated Activities)\": "
       "false, \"C6(Hateful Content & Extremism)\": false}",
       C::violence},
      {"GUARDRAIL: {\"C1(Sexual Content)\": true}", C::sexual},
      {"GUARDRAIL: {\"C2(Harassment & Bullying)\": true}", C::abuse},
      {"GUARDRAIL: {\"C4(False & Deceptive Information)\": true}", C::misinfo},
      {"GUARDRAIL: {\"C5(Illegal/Regulated Activities)\": true}", C::illegal},
      {"GUARDRAIL: {\"C6(Hateful Content & Extremism)\": true}", C::extreme},
      {"GUARDRAIL: {\"c6 (Hateful Content & Extremism)\": true, \"C1(Sexual Content)\": false}",
       C::extreme},
      {"GUARDRAIL: {\"C1(Sexual Content)\": false, \"C2(Harassment & Bullying)\": false}",
       C::safe},
      {"GUARDRAIL: {\"Sexual Content\": maybe}\nGUARDRAIL: {\"C4(False & Deceptive "
       "Information)\": true}",
       C::misinfo},
      {"GUARDRAIL: {\"Illegal/Regulated Activities\": true, \"Illegal/Regulated Activities\": "
       "true}",
       C::illegal},
  };
}

inline std::vector<std::string> malformed() {
  return {
      "I cannot help with that.",
      "GUARDRAIL: {\"Sexual Content\": maybe}",
      "GUARDRAIL: {\"Spam\": true}",
      "GUARDRAIL: {\"Sexual Content\": true, \"Sexual Content\": false}",
      "GUARDRAIL: \"Sexual Content\": true",
  };
}

}  // namespace responses
