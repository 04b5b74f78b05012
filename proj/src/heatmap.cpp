// SPDX-License-Identifier: Apache-2.0
#include <radiosim/radiomap.hpp>

#include <fmt/format.h>
#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <memory>

namespace radiosim
{

namespace
{

    constexpr Rgba kBackground { 255, 255, 255, 255 };
    constexpr Rgba kInk { 0, 0, 0, 255 };
    constexpr int kMargin = 8;
    constexpr int kBarGap = 10;
    constexpr int kBarWidth = 16;
    constexpr int kGlyphW = 5;
    constexpr int kGlyphH = 7;

    // 5x7 glyphs, one byte per row, bit 4 is the leftmost column.
    struct Glyph
    {
        char c;
        std::array<std::uint8_t, kGlyphH> rows;
    };

    constexpr std::array kFont = {
        Glyph { '0', { 0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E } },
        Glyph { '1', { 0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E } },
        Glyph { '2', { 0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F } },
        Glyph { '3', { 0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E } },
        Glyph { '4', { 0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02 } },
        Glyph { '5', { 0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E } },
        Glyph { '6', { 0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E } },
        Glyph { '7', { 0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08 } },
        Glyph { '8', { 0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E } },
        Glyph { '9', { 0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C } },
        Glyph { '.', { 0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C } },
        Glyph { '-', { 0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00 } },
        Glyph { 'd', { 0x01, 0x01, 0x0D, 0x13, 0x11, 0x11, 0x0F } },
        Glyph { 'B', { 0x1E, 0x11, 0x11, 0x1E, 0x11, 0x11, 0x1E } },
        Glyph { ' ', { 0, 0, 0, 0, 0, 0, 0 } },
    };

    class Canvas
    {
      public:
        Canvas(int w, int h, Rgba fill): _image { w, h, std::vector<Rgba>(static_cast<std::size_t>(w) * h, fill) } {}

        void set(int x, int y, Rgba c)
        {
            if (x >= 0 && y >= 0 && x < _image.width && y < _image.height)
                _image.pixels[static_cast<std::size_t>(y) * _image.width + x] = c;
        }

        void fill_rect(int x0, int y0, int w, int h, Rgba c)
        {
            for (auto y = y0; y < y0 + h; ++y)
                for (auto x = x0; x < x0 + w; ++x)
                    set(x, y, c);
        }

        void text(int x, int y, std::string_view s, Rgba c)
        {
            for (auto ch: s)
            {
                auto const it = std::find_if(kFont.begin(), kFont.end(), [&](const Glyph& g) { return g.c == ch; });
                if (it != kFont.end())
                    for (auto r = 0; r < kGlyphH; ++r)
                        for (auto col = 0; col < kGlyphW; ++col)
                            if (it->rows[static_cast<std::size_t>(r)] & (0x10 >> col))
                                set(x + col, y + r, c);
                x += kGlyphW + 1;
            }
        }

        Image take() { return std::move(_image); }

      private:
        Image _image;
    };

    std::string label_for(double value, double span)
    {
        return span >= 10.0 ? fmt::format("{:.0f} dB", value) : fmt::format("{:.1f} dB", value);
    }

} // namespace

Rgba colormap(double t)
{
    struct Stop
    {
        double t;
        double r, g, b;
    };
    static constexpr std::array<Stop, 6> kStops = { {
        { 0.0, 128, 0, 0 },
        { 0.125, 255, 0, 0 },
        { 0.375, 255, 255, 0 },
        { 0.625, 0, 255, 255 },
        { 0.875, 0, 0, 255 },
        { 1.0, 0, 0, 128 },
    } };
    t = std::clamp(std::isfinite(t) ? t : 0.5, 0.0, 1.0);
    for (std::size_t k = 1; k < kStops.size(); ++k)
    {
        if (t <= kStops[k].t)
        {
            auto const& a = kStops[k - 1];
            auto const& b = kStops[k];
            auto const w = (t - a.t) / (b.t - a.t);
            auto mix = [w](double x, double y) { return static_cast<std::uint8_t>(std::lround(x + w * (y - x))); };
            return { mix(a.r, b.r), mix(a.g, b.g), mix(a.b, b.b), 255 };
        }
    }
    return { 0, 0, 128, 255 };
}

double percentile(std::vector<double> values, double q)
{
    if (values.empty())
        return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    auto const pos = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(values.size() - 1);
    auto const lo = static_cast<std::size_t>(std::floor(pos));
    auto const hi = std::min(lo + 1, values.size() - 1);
    return values[lo] + (pos - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

std::pair<Image, HeatmapInfo> render_heatmap_image(const RadioMapResult& result, const HeatmapOptions& options)
{
    auto const nx = result.nx();
    auto const ny = result.ny();
    auto const scale = std::max(1, options.scale);
    auto const& g = result.grids;

    auto info = HeatmapInfo {};
    if (options.color_range)
    {
        info.range_lo = options.color_range->first;
        info.range_hi = options.color_range->second;
    }
    else
    {
        auto covered = std::vector<double> {};
        for (auto const v: g.pathloss_db.values)
            if (is_covered(v))
                covered.push_back(v);
        info.range_lo = covered.empty() ? 0.0 : percentile(covered, 1.0);
        info.range_hi = covered.empty() ? 0.0 : percentile(covered, 99.0);
    }
    auto const span = info.range_hi - info.range_lo;
    info.colorbar_labels = { label_for(info.range_lo, span),
                             label_for(0.5 * (info.range_lo + info.range_hi), span),
                             label_for(info.range_hi, span) };

    info.map_x = kMargin;
    info.map_y = kMargin;
    info.map_width = nx * scale;
    info.map_height = ny * scale;
    auto const labelWidth = static_cast<int>(
        std::max_element(info.colorbar_labels.begin(), info.colorbar_labels.end(), [](auto& a, auto& b) {
            return a.size() < b.size();
        })->size() * (kGlyphW + 1));
    info.width = kMargin + info.map_width + kBarGap + kBarWidth + 4 + labelWidth + kMargin;
    info.height = kMargin + std::max(info.map_height, 3 * (kGlyphH + 2)) + kMargin;

    auto canvas = Canvas(info.width, info.height, kBackground);

    auto fraction = [&](double v) { return span > 0.0 ? (v - info.range_lo) / span : 0.5; };
    for (auto j = 0; j < ny; ++j)
        for (auto i = 0; i < nx; ++i)
        {
            auto const v = g.pathloss_db.at(i, j);
            auto const color = g.building_mask.at(i, j) ? kBuildingColor
                               : is_covered(v)         ? colormap(fraction(v))
                                                       : kUncoveredColor;
            canvas.fill_rect(kMargin + i * scale, kMargin + (ny - 1 - j) * scale, scale, scale, color);
        }

    if (options.tx_marker)
    {
        auto const& b = result.bounds;
        auto const px = kMargin + static_cast<int>(std::lround((result.params.tx.x - b.min_x) / b.width() * info.map_width));
        auto const py =
            kMargin + info.map_height - static_cast<int>(std::lround((result.params.tx.y - b.min_y) / b.height() * info.map_height));
        auto const arm = std::max(3, scale);
        for (auto d = -arm; d <= arm; ++d)
        {
            for (auto w = -1; w <= 1; ++w)
            {
                canvas.set(px + d, py + w, Rgba { 255, 255, 255, 255 });
                canvas.set(px + w, py + d, Rgba { 255, 255, 255, 255 });
            }
        }
        for (auto d = -arm; d <= arm; ++d)
        {
            canvas.set(px + d, py, kInk);
            canvas.set(px, py + d, kInk);
        }
    }

    // Colorbar: hot (low pathloss) at the bottom.
    auto const barX = kMargin + info.map_width + kBarGap;
    auto const barH = info.height - 2 * kMargin;
    for (auto y = 0; y < barH; ++y)
    {
        auto const t = barH > 1 ? 1.0 - static_cast<double>(y) / (barH - 1) : 0.5;
        canvas.fill_rect(barX, kMargin + y, kBarWidth, 1, colormap(t));
    }
    auto const labelX = barX + kBarWidth + 4;
    canvas.text(labelX, kMargin + barH - kGlyphH, info.colorbar_labels[0], kInk);
    canvas.text(labelX, kMargin + barH / 2 - kGlyphH / 2, info.colorbar_labels[1], kInk);
    canvas.text(labelX, kMargin, info.colorbar_labels[2], kInk);

    return { canvas.take(), info };
}

namespace
{

    struct FileCloser
    {
        void operator()(std::FILE* f) const { std::fclose(f); }
    };

} // namespace

HeatmapInfo render_heatmap(const RadioMapResult& result, const std::filesystem::path& path, const HeatmapOptions& options)
{
    auto [image, info] = render_heatmap_image(result, options);

    auto tmp = path;
    tmp += ".partial";
    auto file = std::unique_ptr<std::FILE, FileCloser>(std::fopen(tmp.c_str(), "wb"));
    if (!file)
        throw DatasetError(fmt::format("cannot open '{}' for writing", tmp.string()));

    auto png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    auto pngInfo = png ? png_create_info_struct(png) : nullptr;
    if (!png || !pngInfo)
    {
        png_destroy_write_struct(&png, nullptr);
        throw DatasetError("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png)))
    {
        png_destroy_write_struct(&png, &pngInfo);
        throw DatasetError(fmt::format("failed writing PNG '{}'", path.string()));
    }
    png_init_io(png, file.get());
    png_set_IHDR(png,
                 pngInfo,
                 static_cast<png_uint_32>(image.width),
                 static_cast<png_uint_32>(image.height),
                 8,
                 PNG_COLOR_TYPE_RGBA,
                 PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT,
                 PNG_FILTER_TYPE_DEFAULT);

    auto const lo = fmt::format("{}", info.range_lo);
    auto const hi = fmt::format("{}", info.range_hi);
    auto texts = std::array<png_text, 3> {};
    auto const keys = std::array<std::string, 3> { "colorbar_min_db", "colorbar_max_db", "run_id" };
    auto const values = std::array<std::string, 3> { lo, hi, result.run_id };
    for (std::size_t k = 0; k < texts.size(); ++k)
    {
        texts[k].compression = PNG_TEXT_COMPRESSION_NONE;
        texts[k].key = const_cast<char*>(keys[k].c_str());
        texts[k].text = const_cast<char*>(values[k].c_str());
    }
    png_set_text(png, pngInfo, texts.data(), static_cast<int>(texts.size()));
    png_write_info(png, pngInfo);
    for (auto y = 0; y < image.height; ++y)
        png_write_row(png, reinterpret_cast<png_const_bytep>(&image.pixels[static_cast<std::size_t>(y) * image.width]));
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &pngInfo);
    file.reset();

    std::filesystem::rename(tmp, path);
    return info;
}

Image read_png(const std::filesystem::path& path)
{
    auto img = png_image {};
    img.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_file(&img, path.c_str()))
        throw DatasetError(fmt::format("cannot read PNG '{}': {}", path.string(), img.message));
    img.format = PNG_FORMAT_RGBA;
    auto out = Image { static_cast<int>(img.width), static_cast<int>(img.height), {} };
    out.pixels.resize(static_cast<std::size_t>(img.width) * img.height);
    if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr))
    {
        png_image_free(&img);
        throw DatasetError(fmt::format("cannot decode PNG '{}': {}", path.string(), img.message));
    }
    return out;
}

std::map<std::string, std::string> read_png_text(const std::filesystem::path& path)
{
    auto file = std::unique_ptr<std::FILE, FileCloser>(std::fopen(path.c_str(), "rb"));
    if (!file)
        throw DatasetError(fmt::format("cannot open '{}'", path.string()));
    auto png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    auto pngInfo = png ? png_create_info_struct(png) : nullptr;
    if (!png || !pngInfo)
    {
        png_destroy_read_struct(&png, nullptr, nullptr);
        throw DatasetError("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png)))
    {
        png_destroy_read_struct(&png, &pngInfo, nullptr);
        throw DatasetError(fmt::format("cannot read PNG '{}'", path.string()));
    }
    png_init_io(png, file.get());
    png_read_info(png, pngInfo);
    png_textp texts = nullptr;
    auto count = 0;
    png_get_text(png, pngInfo, &texts, &count);
    auto out = std::map<std::string, std::string> {};
    for (auto k = 0; k < count; ++k)
        out[texts[k].key] = texts[k].text;
    png_destroy_read_struct(&png, &pngInfo, nullptr);
    return out;
}

} // namespace radiosim
