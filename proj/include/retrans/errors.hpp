/*
 * Copyright 2026 The retrans Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *      http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace retrans {

// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input file or config. line() is 1-based, 0 when unknown.
class ParseError : public Error {
 public:
  ParseError(const std::string& where, std::size_t line, const std::string& what)
      : Error(where + (line ? ":" + std::to_string(line) : std::string()) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

// Bad input or configuration that is not a parse failure (missing file, bad value).
class InputError : public Error {
 public:
  using Error::Error;
};

class UnknownSourceToken : public Error {
 public:
  explicit UnknownSourceToken(const std::string& token)
      : Error("source token not in lexicon: '" + token + "'"), token_(token) {}
  const std::string& token() const { return token_; }

 private:
  std::string token_;
};

class ScriptMiss : public Error {
 public:
  explicit ScriptMiss(const std::string& prefix)
      : Error("no scripted translation for prefix '" + prefix + "'") {}
};

class DuplicatePrefix : public ParseError {
 public:
  using ParseError::ParseError;
};

class NonNormalizedLexicon : public Error {
 public:
  using Error::Error;
};

class EmptyCorpus : public Error {
 public:
  EmptyCorpus() : Error("corpus is empty") {}
};

class MissingLM : public Error {
 public:
  MissingLM() : Error("predictor strategy requires a language model") {}
};

class EmptyTrace : public Error {
 public:
  EmptyTrace() : Error("trace has no final record") {}
};

class FlickerOnEmptyFinal : public Error {
 public:
  FlickerOnEmptyFinal() : Error("erasure on a sentence whose final output is empty") {}
};

class LengthMismatch : public Error {
 public:
  using Error::Error;
};

class SchemaMismatch : public Error {
 public:
  using Error::Error;
};

}  // namespace retrans
