#pragma once

// Test-side Wasm assembler. Deliberately shares no code with the library so it
// can serve as an oracle for the decoder and the LEB128 reader.

#include <cassert>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace tw {

using Bytes = std::vector<uint8_t>;

inline constexpr uint8_t I32 = 0x7F, I64 = 0x7E, F32 = 0x7D, F64 = 0x7C;
inline constexpr uint8_t VOID = 0x40;

inline void put_uleb(Bytes& out, uint64_t v)
{
    do {
        uint8_t b = v & 0x7F;
        v >>= 7;
        if (v != 0)
            b |= 0x80;
        out.push_back(b);
    } while (v != 0);
}

inline void put_sleb(Bytes& out, int64_t v)
{
    for (;;) {
        uint8_t b = v & 0x7F;
        v >>= 7;  // arithmetic
        bool done = (v == 0 && !(b & 0x40)) || (v == -1 && (b & 0x40));
        if (!done)
            b |= 0x80;
        out.push_back(b);
        if (done)
            return;
    }
}

inline Bytes uleb(uint64_t v)
{
    Bytes b;
    put_uleb(b, v);
    return b;
}

inline Bytes sleb(int64_t v)
{
    Bytes b;
    put_sleb(b, v);
    return b;
}

/// Fluent instruction emitter.
struct Code
{
    Bytes b;

    Code& op(uint8_t o)
    {
        b.push_back(o);
        return *this;
    }
    Code& u(uint64_t v)
    {
        put_uleb(b, v);
        return *this;
    }
    Code& i32(int32_t v)
    {
        b.push_back(0x41);
        put_sleb(b, v);
        return *this;
    }
    Code& i64(int64_t v)
    {
        b.push_back(0x42);
        put_sleb(b, v);
        return *this;
    }
    Code& get(uint32_t l) { return op(0x20).u(l); }
    Code& set(uint32_t l) { return op(0x21).u(l); }
    Code& tee(uint32_t l) { return op(0x22).u(l); }
    Code& gget(uint32_t g) { return op(0x23).u(g); }
    Code& gset(uint32_t g) { return op(0x24).u(g); }
    Code& block(uint8_t t = VOID) { return op(0x02).op(t); }
    Code& loop(uint8_t t = VOID) { return op(0x03).op(t); }
    Code& if_(uint8_t t = VOID) { return op(0x04).op(t); }
    Code& else_() { return op(0x05); }
    Code& end() { return op(0x0B); }
    Code& br(uint32_t d) { return op(0x0C).u(d); }
    Code& br_if(uint32_t d) { return op(0x0D).u(d); }
    Code& call(uint32_t f) { return op(0x10).u(f); }
    Code& call_indirect(uint32_t type) { return op(0x11).u(type).op(0x00); }
    Code& mem(uint8_t o, uint32_t align, uint32_t offset) { return op(o).u(align).u(offset); }
    Code& append(const Code& other)
    {
        b.insert(b.end(), other.b.begin(), other.b.end());
        return *this;
    }
};

class ModuleBuilder
{
public:
    uint32_t type(Bytes params, Bytes results)
    {
        types_.push_back({std::move(params), std::move(results)});
        return static_cast<uint32_t>(types_.size() - 1);
    }

    uint32_t import_func(std::string module, std::string name, uint32_t type_index)
    {
        assert(funcs_.empty() && "imports must precede defined functions");
        imports_.push_back({std::move(module), std::move(name), type_index});
        return static_cast<uint32_t>(imports_.size() - 1);
    }

    /// `locals` lists one value type per declared local. `body` excludes the final end.
    uint32_t func(uint32_t type_index, Bytes locals, Code body)
    {
        funcs_.push_back({type_index, std::move(locals), std::move(body.b)});
        return static_cast<uint32_t>(imports_.size() + funcs_.size() - 1);
    }

    void export_func(std::string name, uint32_t index) { exports_.push_back({std::move(name), 0x00, index}); }
    void export_memory(std::string name) { exports_.push_back({std::move(name), 0x02, 0}); }

    void memory(uint32_t min, std::optional<uint32_t> max = std::nullopt) { memory_ = {min, max}; }
    void table(uint32_t min) { table_ = min; }
    void global(uint8_t type, bool is_mutable, Code init) { globals_.push_back({type, is_mutable, std::move(init.b)}); }
    void data(uint32_t offset, Bytes bytes) { data_.push_back({offset, std::move(bytes)}); }
    void data(uint32_t offset, const std::string& text) { data(offset, Bytes(text.begin(), text.end())); }
    void elem(uint32_t offset, std::vector<uint32_t> funcs) { elems_.push_back({offset, std::move(funcs)}); }
    void start(uint32_t f) { start_ = f; }
    void custom(std::string name, Bytes payload) { customs_.push_back({std::move(name), std::move(payload)}); }

    Bytes build() const
    {
        Bytes out{0x00, 0x61, 0x73, 0x6D, 0x01, 0x00, 0x00, 0x00};
        for (const auto& c : customs_) {
            Bytes p;
            name(p, c.name);
            p.insert(p.end(), c.payload.begin(), c.payload.end());
            section(out, 0, p);
        }
        if (!types_.empty()) {
            Bytes p;
            put_uleb(p, types_.size());
            for (const auto& t : types_) {
                p.push_back(0x60);
                vec(p, t.params);
                vec(p, t.results);
            }
            section(out, 1, p);
        }
        if (!imports_.empty()) {
            Bytes p;
            put_uleb(p, imports_.size());
            for (const auto& i : imports_) {
                name(p, i.module);
                name(p, i.name);
                p.push_back(0x00);
                put_uleb(p, i.type);
            }
            section(out, 2, p);
        }
        if (!funcs_.empty()) {
            Bytes p;
            put_uleb(p, funcs_.size());
            for (const auto& f : funcs_)
                put_uleb(p, f.type);
            section(out, 3, p);
        }
        if (table_) {
            Bytes p{0x01, 0x70, 0x00};
            put_uleb(p, *table_);
            section(out, 4, p);
        }
        if (memory_) {
            Bytes p{0x01};
            p.push_back(memory_->second ? 0x01 : 0x00);
            put_uleb(p, memory_->first);
            if (memory_->second)
                put_uleb(p, *memory_->second);
            section(out, 5, p);
        }
        if (!globals_.empty()) {
            Bytes p;
            put_uleb(p, globals_.size());
            for (const auto& g : globals_) {
                p.push_back(g.type);
                p.push_back(g.is_mutable ? 1 : 0);
                p.insert(p.end(), g.init.begin(), g.init.end());
                p.push_back(0x0B);
            }
            section(out, 6, p);
        }
        if (!exports_.empty()) {
            Bytes p;
            put_uleb(p, exports_.size());
            for (const auto& e : exports_) {
                name(p, e.name);
                p.push_back(e.kind);
                put_uleb(p, e.index);
            }
            section(out, 7, p);
        }
        if (start_) {
            Bytes p;
            put_uleb(p, *start_);
            section(out, 8, p);
        }
        if (!elems_.empty()) {
            Bytes p;
            put_uleb(p, elems_.size());
            for (const auto& e : elems_) {
                p.push_back(0x00);
                p.push_back(0x41);
                put_sleb(p, static_cast<int32_t>(e.offset));
                p.push_back(0x0B);
                put_uleb(p, e.funcs.size());
                for (auto f : e.funcs)
                    put_uleb(p, f);
            }
            section(out, 9, p);
        }
        if (!funcs_.empty()) {
            Bytes p;
            put_uleb(p, funcs_.size());
            for (const auto& f : funcs_) {
                Bytes entry;
                // run-length encode the locals
                std::vector<std::pair<uint32_t, uint8_t>> groups;
                for (auto t : f.locals) {
                    if (!groups.empty() && groups.back().second == t)
                        ++groups.back().first;
                    else
                        groups.push_back({1, t});
                }
                put_uleb(entry, groups.size());
                for (auto [n, t] : groups) {
                    put_uleb(entry, n);
                    entry.push_back(t);
                }
                entry.insert(entry.end(), f.body.begin(), f.body.end());
                entry.push_back(0x0B);
                put_uleb(p, entry.size());
                p.insert(p.end(), entry.begin(), entry.end());
            }
            section(out, 10, p);
        }
        if (!data_.empty()) {
            Bytes p;
            put_uleb(p, data_.size());
            for (const auto& d : data_) {
                p.push_back(0x00);
                p.push_back(0x41);
                put_sleb(p, static_cast<int32_t>(d.offset));
                p.push_back(0x0B);
                put_uleb(p, d.bytes.size());
                p.insert(p.end(), d.bytes.begin(), d.bytes.end());
            }
            section(out, 11, p);
        }
        return out;
    }

private:
    static void name(Bytes& p, const std::string& s)
    {
        put_uleb(p, s.size());
        p.insert(p.end(), s.begin(), s.end());
    }
    static void vec(Bytes& p, const Bytes& v)
    {
        put_uleb(p, v.size());
        p.insert(p.end(), v.begin(), v.end());
    }
    static void section(Bytes& out, uint8_t id, const Bytes& payload)
    {
        out.push_back(id);
        put_uleb(out, payload.size());
        out.insert(out.end(), payload.begin(), payload.end());
    }

    struct Type
    {
        Bytes params, results;
    };
    struct Imp
    {
        std::string module, name;
        uint32_t type;
    };
    struct Fn
    {
        uint32_t type;
        Bytes locals;
        Bytes body;
    };
    struct Exp
    {
        std::string name;
        uint8_t kind;
        uint32_t index;
    };
    struct Glob
    {
        uint8_t type;
        bool is_mutable;
        Bytes init;
    };
    struct Data
    {
        uint32_t offset;
        Bytes bytes;
    };
    struct Elem
    {
        uint32_t offset;
        std::vector<uint32_t> funcs;
    };
    struct Custom
    {
        std::string name;
        Bytes payload;
    };

    std::vector<Type> types_;
    std::vector<Imp> imports_;
    std::vector<Fn> funcs_;
    std::vector<Exp> exports_;
    std::vector<Glob> globals_;
    std::vector<Data> data_;
    std::vector<Elem> elems_;
    std::vector<Custom> customs_;
    std::optional<std::pair<uint32_t, std::optional<uint32_t>>> memory_;
    std::optional<uint32_t> table_;
    std::optional<uint32_t> start_;
};

}  // namespace tw
