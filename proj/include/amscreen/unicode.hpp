#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace amscreen::unicode {

// Decodes UTF-8; ill-formed sequences become U+FFFD.
std::u32string decode(std::string_view utf8);
std::string encode(std::u32string_view codepoints);
void append(std::string& out, char32_t cp);

std::size_t codepoint_count(std::string_view utf8);

std::string nfc(std::string_view utf8);
bool is_nfc(std::string_view utf8);

bool is_whitespace(char32_t cp);
bool is_alphabetic(char32_t cp);
bool is_latin_letter(char32_t cp);
bool is_bengali_letter(char32_t cp);
// Letters, combining marks, digits and the joiners used inside Bengali words.
bool is_word_char(char32_t cp);
bool is_control(char32_t cp);
char32_t to_lower(char32_t cp);

inline constexpr char32_t kDanda = 0x0964;

// Trims Unicode whitespace from both ends.
std::string trim(std::string_view utf8);

// Collapses every whitespace run into one ASCII space and trims.
std::string collapse_whitespace(std::string_view utf8);

}  // namespace amscreen::unicode
