#include "weblapse/assemble.hpp"

#include "weblapse/error.hpp"

extern "C" {
#include <libavcodec/avcodec.h>
#include <libavformat/avformat.h>
#include <libavutil/channel_layout.h>
#include <libavutil/imgutils.h>
#include <libavutil/opt.h>
}

#include <cmath>
#include <cstring>
#include <string>
#include <vector>

namespace weblapse::assemble {

namespace {

std::string av_err(int code) {
    char buf[AV_ERROR_MAX_STRING_SIZE] = {0};
    av_strerror(code, buf, sizeof buf);
    return buf;
}

[[noreturn]] void fail(const std::string& what, int code = 0) {
    throw Error(ErrorKind::EncoderFailure, code ? what + ": " + av_err(code) : what);
}

// BT.601 limited-range RGB -> YUV420p with 2x2 chroma averaging.
void rgb_to_yuv420(const render::Image& img, AVFrame* frame) {
    const int w = img.width, h = img.height;
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            render::Rgb p = img.at(x, y);
            int yy = (66 * p.r + 129 * p.g + 25 * p.b + 128) >> 8;
            frame->data[0][y * frame->linesize[0] + x] = static_cast<std::uint8_t>(yy + 16);
        }
    }
    for (int cy = 0; cy < h / 2; ++cy) {
        for (int cx = 0; cx < w / 2; ++cx) {
            int r = 0, g = 0, b = 0;
            for (int dy = 0; dy < 2; ++dy)
                for (int dx = 0; dx < 2; ++dx) {
                    render::Rgb p = img.at(cx * 2 + dx, cy * 2 + dy);
                    r += p.r;
                    g += p.g;
                    b += p.b;
                }
            r /= 4;
            g /= 4;
            b /= 4;
            int u = ((-38 * r - 74 * g + 112 * b + 128) >> 8) + 128;
            int v = ((112 * r - 94 * g - 18 * b + 128) >> 8) + 128;
            frame->data[1][cy * frame->linesize[1] + cx] = static_cast<std::uint8_t>(u);
            frame->data[2][cy * frame->linesize[2] + cx] = static_cast<std::uint8_t>(v);
        }
    }
}

struct EncoderStream {
    AVStream* stream = nullptr;
    AVCodecContext* ctx = nullptr;
};

void send_and_mux(AVFormatContext* fmt, EncoderStream& s, AVFrame* frame, AVPacket* pkt) {
    int rc = avcodec_send_frame(s.ctx, frame);
    if (rc < 0) fail("encoder rejected frame", rc);
    while (true) {
        rc = avcodec_receive_packet(s.ctx, pkt);
        if (rc == AVERROR(EAGAIN) || rc == AVERROR_EOF) return;
        if (rc < 0) fail("encoder failed", rc);
        pkt->stream_index = s.stream->index;
        // constant-rate stills: give the muxer a duration for the final sample
        if (pkt->duration == 0 && s.ctx->codec_type == AVMEDIA_TYPE_VIDEO) pkt->duration = 1;
        av_packet_rescale_ts(pkt, s.ctx->time_base, s.stream->time_base);
        rc = av_interleaved_write_frame(fmt, pkt);
        av_packet_unref(pkt);
        if (rc < 0) fail("muxer write failed", rc);
    }
}

} // namespace

void encode_video(const std::filesystem::path& out_path, const render::Image& title_slide,
                  const std::vector<render::Image>& frames,
                  const std::optional<AudioClip>& soundtrack, const VideoSpec& spec) {
    if (frames.empty()) throw Error(ErrorKind::NoFrames, "a video needs at least one memento frame");
    const int width = title_slide.width, height = title_slide.height;
    for (const auto& f : frames) {
        if (f.width != width || f.height != height)
            throw Error(ErrorKind::UnsupportedImage, "all video frames must share one size");
    }

    const int repeats = std::max(1, static_cast<int>(std::lround(spec.frame_interval_s * spec.fps)));
    const double total_duration_s = (1.0 + frames.size()) * spec.frame_interval_s;

    AVFormatContext* fmt = nullptr;
    int rc = avformat_alloc_output_context2(&fmt, nullptr, "mp4", out_path.c_str());
    if (rc < 0 || !fmt) fail("cannot create MP4 muxer", rc);

    EncoderStream video;
    EncoderStream audio;
    AVFrame* vframe = nullptr;
    AVFrame* aframe = nullptr;
    AVPacket* pkt = av_packet_alloc();

    auto cleanup = [&] {
        if (pkt) av_packet_free(&pkt);
        if (vframe) av_frame_free(&vframe);
        if (aframe) av_frame_free(&aframe);
        if (video.ctx) avcodec_free_context(&video.ctx);
        if (audio.ctx) avcodec_free_context(&audio.ctx);
        if (fmt) {
            if (fmt->pb) avio_closep(&fmt->pb);
            avformat_free_context(fmt);
            fmt = nullptr;
        }
    };

    try {
        // video stream: H.264, falling back to MPEG-4 Part 2 on lean builds
        const AVCodec* vcodec = avcodec_find_encoder_by_name("libx264");
        if (!vcodec) vcodec = avcodec_find_encoder(AV_CODEC_ID_MPEG4);
        if (!vcodec) fail("no usable video encoder in this libavcodec");

        video.stream = avformat_new_stream(fmt, nullptr);
        video.ctx = avcodec_alloc_context3(vcodec);
        if (!video.stream || !video.ctx) fail("cannot allocate video stream");
        video.ctx->width = width;
        video.ctx->height = height;
        video.ctx->pix_fmt = AV_PIX_FMT_YUV420P;
        video.ctx->time_base = AVRational{1, spec.fps};
        video.ctx->framerate = AVRational{spec.fps, 1};
        video.ctx->gop_size = repeats * 2;
        if (vcodec->id == AV_CODEC_ID_H264) {
            av_opt_set(video.ctx->priv_data, "preset", "veryfast", 0);
            av_opt_set(video.ctx->priv_data, "crf", "23", 0);
        } else {
            video.ctx->bit_rate = 2'000'000;
        }
        if (fmt->oformat->flags & AVFMT_GLOBALHEADER)
            video.ctx->flags |= AV_CODEC_FLAG_GLOBAL_HEADER;
        rc = avcodec_open2(video.ctx, vcodec, nullptr);
        if (rc < 0) fail("cannot open video encoder", rc);
        rc = avcodec_parameters_from_context(video.stream->codecpar, video.ctx);
        if (rc < 0) fail("cannot export video params", rc);
        video.stream->time_base = video.ctx->time_base;

        // audio stream, only when a soundtrack was chosen
        if (soundtrack) {
            const AVCodec* acodec = avcodec_find_encoder(AV_CODEC_ID_AAC);
            if (!acodec) fail("no AAC encoder in this libavcodec");
            audio.stream = avformat_new_stream(fmt, nullptr);
            audio.ctx = avcodec_alloc_context3(acodec);
            if (!audio.stream || !audio.ctx) fail("cannot allocate audio stream");
            audio.ctx->sample_fmt = AV_SAMPLE_FMT_FLTP;
            audio.ctx->sample_rate = soundtrack->sample_rate;
            audio.ctx->bit_rate = 128'000;
            audio.ctx->time_base = AVRational{1, soundtrack->sample_rate};
#if LIBAVCODEC_VERSION_MAJOR >= 60
            av_channel_layout_default(&audio.ctx->ch_layout, soundtrack->channels);
#else
            audio.ctx->channels = soundtrack->channels;
            audio.ctx->channel_layout =
                soundtrack->channels == 2 ? AV_CH_LAYOUT_STEREO : AV_CH_LAYOUT_MONO;
#endif
            if (fmt->oformat->flags & AVFMT_GLOBALHEADER)
                audio.ctx->flags |= AV_CODEC_FLAG_GLOBAL_HEADER;
            rc = avcodec_open2(audio.ctx, acodec, nullptr);
            if (rc < 0) fail("cannot open AAC encoder", rc);
            rc = avcodec_parameters_from_context(audio.stream->codecpar, audio.ctx);
            if (rc < 0) fail("cannot export audio params", rc);
            audio.stream->time_base = audio.ctx->time_base;
        }

        rc = avio_open(&fmt->pb, out_path.c_str(), AVIO_FLAG_WRITE);
        if (rc < 0) fail("cannot open " + out_path.string(), rc);
        rc = avformat_write_header(fmt, nullptr);
        if (rc < 0) fail("cannot write MP4 header", rc);

        // video frames
        vframe = av_frame_alloc();
        if (!vframe) fail("cannot allocate frame");
        vframe->format = AV_PIX_FMT_YUV420P;
        vframe->width = width;
        vframe->height = height;
        rc = av_frame_get_buffer(vframe, 0);
        if (rc < 0) fail("cannot allocate frame buffer", rc);

        std::int64_t pts = 0;
        auto emit_image = [&](const render::Image& img) {
            rc = av_frame_make_writable(vframe);
            if (rc < 0) fail("frame not writable", rc);
            rgb_to_yuv420(img, vframe);
            for (int i = 0; i < repeats; ++i) {
                vframe->pts = pts++;
                send_and_mux(fmt, video, vframe, pkt);
            }
        };
        emit_image(title_slide);
        for (const auto& f : frames) emit_image(f);
        send_and_mux(fmt, video, nullptr, pkt); // flush

        // audio: trimmed clip is expected to match total_duration_s
        if (soundtrack) {
            const AudioClip& clip = *soundtrack;
            const std::size_t want_frames =
                static_cast<std::size_t>(std::llround(total_duration_s * clip.sample_rate));
            const std::size_t have_frames = clip.frame_count();
            const int frame_size = audio.ctx->frame_size > 0 ? audio.ctx->frame_size : 1024;

            aframe = av_frame_alloc();
            if (!aframe) fail("cannot allocate audio frame");
            aframe->format = AV_SAMPLE_FMT_FLTP;
            aframe->sample_rate = clip.sample_rate;
            aframe->nb_samples = frame_size;
#if LIBAVCODEC_VERSION_MAJOR >= 60
            av_channel_layout_default(&aframe->ch_layout, clip.channels);
#else
            aframe->channels = clip.channels;
            aframe->channel_layout = audio.ctx->channel_layout;
#endif
            rc = av_frame_get_buffer(aframe, 0);
            if (rc < 0) fail("cannot allocate audio buffer", rc);

            std::int64_t apts = 0;
            for (std::size_t start = 0; start < want_frames; start += frame_size) {
                rc = av_frame_make_writable(aframe);
                if (rc < 0) fail("audio frame not writable", rc);
                const int n = static_cast<int>(std::min<std::size_t>(frame_size, want_frames - start));
                aframe->nb_samples = n;
                for (int c = 0; c < clip.channels; ++c) {
                    float* plane = reinterpret_cast<float*>(aframe->data[c]);
                    for (int i = 0; i < n; ++i) {
                        std::size_t src = start + i;
                        plane[i] = src < have_frames
                                       ? clip.samples[src * clip.channels + c] / 32768.0f
                                       : 0.0f;
                    }
                }
                aframe->pts = apts;
                apts += n;
                send_and_mux(fmt, audio, aframe, pkt);
            }
            send_and_mux(fmt, audio, nullptr, pkt); // flush
        }

        rc = av_write_trailer(fmt);
        if (rc < 0) fail("cannot finalize MP4", rc);
    } catch (...) {
        cleanup();
        std::error_code ec;
        std::filesystem::remove(out_path, ec);
        throw;
    }
    cleanup();
}

} // namespace weblapse::assemble
