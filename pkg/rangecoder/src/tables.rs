//! Scale quantization grid for the Gaussian model.
//!
//! 256 levels, geometrically spaced from 0.11 to 256.  Each incoming scale
//! snaps to the level whose geometric midpoints bracket it, so encoder and
//! decoder agree on the exact table from the 32-bit float alone.  The grid
//! is stored as raw IEEE-754 bit patterns: the values below are data, not
//! arithmetic, so no compiler or libm can perturb them.

const SIGMA_LEVEL_BITS: [u64; 256] = [
    0x3fbc28f5c28f5c29, 0x3fbd077d9e4d5b6c, 0x3fbdece3ff0dabfa, 0x3fbed95f2d4886a0, 0x3fbfcd271e6d2a39, 0x3fc0643ac10fd93b,
    0x3fc0e5c2e7efc936, 0x3fc16b4aaa8cf6df, 0x3fc1f4f1a1d59279, 0x3fc282d8606981c1, 0x3fc315207a4f8cd4, 0x3fc3abec8ce773db,
    0x3fc44760471aceca, 0x3fc4e7a071cea75b, 0x3fc58cd2f897cce3, 0x3fc6371ef2b3f124, 0x3fc6e6acac49adcc, 0x3fc79ba5aff1a2e9,
    0x3fc85634d08aeffc, 0x3fc91686335d5b2d, 0x3fc9dcc75a8b8c63, 0x3fcaa9272fd7d530, 0x3fcb7bd60fbe11cb, 0x3fcc5505d4e5439f,
    0x3fcd34e9e3eb9aa8, 0x3fce1bb7378fb848, 0x3fcf09a46d3a0c35, 0x3fcffee9d1e942ff, 0x3fd07de0b7c26a84, 0x3fd100338d4c6e7a,
    0x3fd1868c403f3acb, 0x3fd2110a9af9fc72, 0x3fd29fcf63144a12, 0x3fd332fc611f605d, 0x3fd3cab468a4a67f, 0x3fd4671b60635eed,
    0x3fd508564acf77ba, 0x3fd5ae8b4ed37d1b, 0x3fd659e1c0d7c099, 0x3fd70a822c10d7e4, 0x3fd7c0965c17a6ee, 0x3fd87c4966cd3aab,
    0x3fd93dc7b68ccb4d, 0x3fda053f14ae4fef, 0x3fdad2deb45c2004, 0x3fdba6d73dbe332a, 0x3fdc815ad97da3b0, 0x3fdd629d3ca32d93,
    0x3fde4ad3b4d378a8, 0x3fdf3a3534ec1362, 0x3fe0187d31020d0a, 0x3fe097aed069cf4e, 0x3fe11acd91c27e07, 0x3fe1a1f87bf9aded,
    0x3fe22d4f8b2ce575, 0x3fe2bcf3b83b2c48, 0x3fe35107009269f7, 0x3fe3e9ac6e3a6cb6, 0x3fe48708201f7f34, 0x3fe5293f529e83f9,
    0x3fe5d07868549bea, 0x3fe67cdaf3346de1, 0x3fe72e8fbde3355f, 0x3fe7e5c0d55fcfc9, 0x3fe8a29992f610b7, 0x3fe96546a680b841,
    0x3fea2df620fc78a1, 0x3feafcd77f6e8b99, 0x3febd21bb6216c43, 0x3fecadf53c3a5dab, 0x3fed909817aa7c29, 0x3fee7a39e97e2cbb,
    0x3fef6b11fa8dd455, 0x3ff031aca4496bc9, 0x3ff0b1a549d1fdc1, 0x3ff13591360e2c2f, 0x3ff1bd8fa078143f, 0x3ff249c0b7396bb3,
    0x3ff2da45a6c8e81d, 0x3ff36f40a1c3d2e4, 0x3ff408d4e905a5da, 0x3ff4a726d3ff9a5b, 0x3ff54a5bd952246b, 0x3ff5f29a97aa62bf,
    0x3ff6a00adee59cbc, 0x3ff752d5b97cf7f8, 0x3ff80b25763b9feb, 0x3ff8c925b241ac26, 0x3ff98d0363562396, 0x3ffa56ece28a8dd2,
    0x3ffb2711f7329722, 0x3ffbfda3e2325f78, 0x3ffcdad569a62164, 0x3ffdbedae4e5f2d7, 0x3ffea9ea48e877bd, 0x3fff9c3b35077481,
    0x40004b038014a313, 0x4000cbc463292e86, 0x4001507ebb50f848, 0x4001d951f0de9d38, 0x4002665e64565204, 0x4002f7c576173492,
    0x40038da98e41288e, 0x4004282e24d91d6a, 0x4004c777ca2dab20, 0x40056bac2f7e0207, 0x400614f22fe539ed, 0x4006c371d98c1cb3,
    0x4007775477239987, 0x400830c499aa1ebd, 0x4008efee227e2a4d, 0x4009b4fe4dc072fd, 0x400a8023bd081f82, 0x400b518e826b9396,
    0x400c29702be06fdd, 0x400d07fbcef5754f, 0x400ded6614e912e0, 0x400ed9e5471f793f, 0x400fcdb15bfb27e4, 0x40106482020d7ead,
    0x4010e60c5c007698, 0x40116b9663124b26, 0x4011f53fb0ba8728, 0x40128328d826a84b, 0x401315736def6d94, 0x4013ac42100b0f86,
    0x401447b86dfe4382, 0x4014e7fb514dfa72, 0x40158d30a633da7e, 0x4016377f849782d5, 0x4016e710394eb968, 0x40179c0c4fa6b2cf,
    0x4018569e9b38b621, 0x401916f3420c7014, 0x4019dd37c70a5baf, 0x401aa99b14c0b8e0, 0x401b7c4d887d9dc6, 0x401c5580fdc0c2ff,
    0x401d3568da07c047, 0x401e1c3a18f78432, 0x401f0a2b58e5e79c, 0x401fff74e7c6543e, 0x40207e28683e46e0, 0x4021007d744c61e0,
    0x402186d86f4016a3, 0x402211592402c39b, 0x4022a02058ba74f2, 0x4023334fd68b429f, 0x4023cb0a7195f7a3, 0x402467741135e68a,
    0x402508b1b87fded6, 0x4025aee98f044575, 0x40265a42e9d66346, 0x40270ae654db0c53, 0x4027c0fd9c60d3ac, 0x40287cb3d7041114,
    0x40293e356fe10fac, 0x402a05b03116cf21, 0x402ad3534e9cd465, 0x402ba74f716e99ec, 0x402c81d6c30f4459, 0x402d631cf96854f4,
    0x402e4b5763062924, 0x402f3abcf3b52bf1, 0x403018c328c15af6, 0x403097f6f112576d, 0x40311b17ec658ee7, 0x4031a245222f75f7,
    0x40322d9e8f189cc8, 0x4032bd452c8f5f70, 0x4033515af8956695, 0x4033ea02fdcad115, 0x403487615bb8edfd, 0x4035299b4f5e7ced,
    0x4035d0d73bff7b0f, 0x40367d3cb43a9212, 0x40372ef483664f9b, 0x4037e628b7385c6f, 0x4038a304a9b8fc0f, 0x403965b50b852f91,
    0x403a2e67ee61e941, 0x403afd4cd022d15e, 0x403bd294a5e730d6, 0x403cae71e7afaa2c, 0x403d91189c4f7ebd, 0x403e7abe65bc33ad,
    0x403f6b9a8dbe8045, 0x404031f30983c34a, 0x4040b1eddb56b774, 0x404135dc05094b66, 0x4041bddcbe9d4f37, 0x40424a1036c85bed,
    0x4042da979a915bc9, 0x40436f951d2a407d, 0x4044092c0007c2dd, 0x4044a7809b391649, 0x40454ab866018932, 0x4045f2f9ffb61b9d,
    0x4046a06d38e124f1, 0x4047533b1cae3259, 0x40480b8dfaa058b4, 0x4048c9917095465a, 0x40498d7275177327, 0x404a575f6201e018,
    0x404b2787ff77eb00, 0x404bfe1d8f33ce95, 0x404cdb52d82e7c21, 0x404dbf5c32a3907d, 0x404eaa6f94743c74, 0x404f9cc49dec0edd,
    0x40504b4a537552e8, 0x4050cc0d663ab243, 0x405150c9ff5a31d2, 0x4051d99f87aef5b3, 0x405266ae6049f0bb, 0x4052f817ea1b5726,
    0x40538dfe8dd89d81, 0x40542885c420e20d, 0x4054c7d21de1adfb, 0x40556c094cfe0add, 0x405615522d39f888, 0x4056c3d4cd6c5fa2,
    0x405777ba78f9ae1b, 0x4058312dc1995b77, 0x4058f05a8968a510, 0x4059b56e0d4ce477, 0x405a8096efa7f504, 0x405b5205436130f4,
    0x405c29ea9745a2bd, 0x405d087a01c21b66, 0x405dede82cf9f4cd, 0x405eda6b633d5b8a, 0x405fce3b9be213c9, 0x406064c94440e19f,
    0x4060e655d1507128, 0x40616be21ce0c7da, 0x4061f58dc0f2cd63, 0x40628379514199ce, 0x406315c662f7e57f, 0x4063ac9794a263e1,
    0x406448109660ea61, 0x4064e856325853da, 0x40658d8e5567200b, 0x406637e0181ede76, 0x4066e773c804844d, 0x40679c72f119ddba,
    0x4068570867b25c89, 0x406917605295975d, 0x4069dda83571dfa7, 0x406aaa0efba1672b, 0x406b7cc503448183, 0x406c55fc28b3a22a,
    0x406d35e7d24bcc73, 0x406e1cbcfc983ffc, 0x406f0ab246dc42c8, 0x4070000000000000,
];

const SIGMA_MID_BITS: [u64; 255] = [
    0x3fbc976133ee8775, 0x3fbd7951a36c7a2c, 0x3fbe623b8759d6f4, 0x3fbf5255fd090965, 0x3fc024eceaaac663, 0x3fc0a480d10ad775,
    0x3fc12804e1fb4890, 0x3fc1af983c62d75f, 0x3fc23b5af515a569, 0x3fc2cb6e1e6ca08f, 0x3fc35ff3d018e912, 0x3fc3f90f2f350f33,
    0x3fc496e476961116, 0x3fc53998ff5e10c7, 0x3fc5e15349d2c999, 0x3fc68e3b0679dc5b, 0x3fc740791f7d1a32, 0x3fc7f837c259070b,
    0x3fc8b5a269d7de32, 0x3fc978e5e85b758d, 0x3fca423072786ecf, 0x3fcb11b1a9e53925, 0x3fcbe79aa8bf79a0, 0x3fccc41e0d2a8531,
    0x3fcda7700549ac12, 0x3fce91c65b992c2c, 0x3fcf835883a8b668, 0x3fd03e2fd39d450f, 0x3fd0be8b59e520ac, 0x3fd142dd343f40b5,
    0x3fd1cb44b2446e48, 0x3fd257e21afba5a4, 0x3fd2e8d6b47d5f95, 0x3fd37e44cbd3363c, 0x3fd4184fbd15c237, 0x3fd4b71bfbca9bdc,
    0x3fd55acf1b847b53, 0x3fd6038fd8c7821e, 0x3fd6b1862233c8b5, 0x3fd764db21f85b70, 0x3fd81db94790e333, 0x3fd8dc4c51d047e5,
    0x3fd9a0c1593aad02, 0x3fda6b46dab13b58, 0x3fdb3c0cc2723e66, 0x3fdc134477702fa2, 0x3fdcf120e7025ebc, 0x3fddd5d690f1faf0,
    0x3fdec19b93e65770, 0x3fdfb4a7ba335b6f, 0x3fe0579a438692d0, 0x3fe0d8bea212016f, 0x3fe15ddf87d5f825, 0x3fe1e71c75697d7f,
    0x3fe27495e454f491, 0x3fe3066d4ec159e1, 0x3fe39cc537643a20, 0x3fe437c131aa42a0, 0x3fe4d785ea225a30, 0x3fe57c392f2b4057,
    0x3fe62601f9e5c0aa, 0x3fe6d508776d9814, 0x3fe78976125b3adc, 0x3fe843757c90bb2b, 0x3fe90332b95421e7, 0x3fe9c8db27b99dc4,
    0x3fea949d8d5fff83, 0x3feb66aa21820dbf, 0x3fec3f32985f4ebf, 0x3fed1e6a2efefb5d, 0x3fee0485b74fe39b, 0x3feef1bba4a8234d,
    0x3fefe64418a79c0c, 0x3ff0712c78402073, 0x3ff0f31ae953ac37, 0x3ff1790c1e79795c, 0x3ff2031fc9937511, 0x3ff2917696fa7047,
    0x3ff32432353962c0, 0x3ff3bb755d05c70a, 0x3ff45763d976f21c, 0x3ff4f822907e5859, 0x3ff59dd78ba2c105, 0x3ff648aa01007922,
    0x3ff6f8c25c90a6ed, 0x3ff7ae4a49b9f00e, 0x3ff8696cbd2cb5e2, 0x3ff92a55ff0d3d3d, 0x3ff9f133b56e2963, 0x3ffabe34ef1dc4e2,
    0x3ffb918a2ec8a6c4, 0x3ffc6b657674569b, 0x3ffd4bfa5354a6c4, 0x3ffe337de9fe91b6, 0x3fff222702fb7d58, 0x40000c170bdfef17,
    0x40008ae6b00425c9, 0x40010da06fd0174e, 0x400194633a4aa70a, 0x40021f4ef2edc9fc, 0x4002ae8479324199, 0x40034225b056f7e2,
    0x4003da558765d3f8, 0x400477380177ece0, 0x400518f23e3b0f4c, 0x4005bfaa82ba9a8e, 0x40066b88426dc8e1, 0x40071cb4288d87a6,
    0x4007d35821b4150d, 0x40088f9f65c8aa26, 0x400951b682398a44, 0x400a19cb6486e34f, 0x400ae80d6520fd95, 0x400bbcad529c4d76,
    0x400c97dd7d3e0d97, 0x400d79d1c2e41d43, 0x400e62bf9b4af435, 0x400f52de24b49330, 0x401025331879b7f3, 0x4010a4c9296e3928,
    0x4011284f761198eb, 0x4011afe51dd1dcfe, 0x40123baa360e9c08, 0x4012cbbfd1b08716, 0x4013604808fcf1a6, 0x4013f96601a73258,
    0x4014973df721c4f7, 0x401539f5433125c3, 0x4015e1b266c26d3c, 0x40168e9d1307c3ef, 0x401740de32dcd622, 0x4017f89ff475806a,
    0x4018b60dd358ff8b, 0x40197954a2ac007f, 0x401a42a297cbffc8, 0x401b1227553e7a92, 0x401be813f5f6882e, 0x401cc49b18f38684,
    0x401da7f0ed3b9992, 0x401e924b3e34d37f, 0x401f83e1805ff140, 0x40203e766f3bd783, 0x4020bed4237be7b5, 0x402143283d078444,
    0x4021cb920bff9211, 0x40225831d7f75cb1, 0x4022e928e7980111, 0x40237e9988803475, 0x402418a7176244e6, 0x4024b77608623ecc,
    0x40255b2befb63290, 0x402603ef8a8aa4bf, 0x4026b1e8c82d4388, 0x40276540d3800cb2, 0x40281e221cb720a5, 0x4028dcb863639085,
    0x4029a130c0cd87c3, 0x402a6bb9b2a0443d, 0x402b3c8325ea6372, 0x402c13be82751f13, 0x402cf19eb6752811, 0x402dd6584297e45b,
    0x402ec221466fe93d, 0x402fb5318d43a32a, 0x403057e14da09941, 0x4030d907dd8d4eb9, 0x40315e2b0606c78e, 0x4031e76a482cfb08,
    0x403274e61e157720, 0x403306c0027abece, 0x40339d1a78a86334, 0x4034381914a5b794, 0x4034d7e083a10ec1, 0x40357c96949d8016,
    0x40362662416541af, 0x4036d56bb7c2b5cd, 0x403789dc63025a21, 0x403843def5bfd901, 0x4039039f74008e18, 0x4039c94b3d9de2d0,
    0x403a95111901f92e, 0x403b67213e392fc2, 0x403c3fad625b1d14, 0x403d1ee8c34db5a7, 0x403e050833e56546, 0x403ef2422864fa03,
    0x403fe6cec3605624, 0x40407173f1827ad0, 0x4040f3649765b5d4, 0x4041795812ca8afc, 0x4042036e161cae7d, 0x404291c74e42f90d,
    0x404324856a5acc98, 0x4043bbcb23b092d9, 0x404457bc45f738b2, 0x4044f87db7c09800, 0x40459e358338d101, 0x4046490adf26a455,
    0x4046f9263832eed2, 0x4047aeb13a797944, 0x404869d6db655f97, 0x40492ac363db64cb, 0x4049f1a47ab49b6e, 0x404abea92f8bdd79,
    0x404b920205e0a1e3, 0x404c6be10091d28e, 0x404d4c79adb35a07, 0x404e340132c135d3, 0x404f22ae5932f075, 0x40500c5ccdb93e77,
    0x40508b2e991cc289, 0x40510dea912c2a28, 0x405194afa574d0b2, 0x40521f9db9fb49bd, 0x4052aed5aec73cc4, 0x4053427967aae308,
    0x4053daabd447ff03, 0x40547790f854331d, 0x4055194df41eac7a, 0x4055c0090d592623, 0x40566be9b82658a5, 0x40571d18a06ffaea,
    0x4057d3bfb38689b9, 0x4058900a2a0d1cda, 0x405952249233a2fd, 0x405a1a3cda41efd8, 0x405ae8825b761b39, 0x405bbd25e538c361,
    0x405c9859c8a9d96e, 0x405d7a51e488b37e, 0x405e6343b17a35d4, 0x405f53664eaffa6c, 0x406025794779bacc, 0x4060a511830c16e5,
    0x4061289a0b6c1a7c, 0x4061b032008f15b7, 0x40623bf9786016b9, 0x4062cc118657942d, 0x4063609c434f1752, 0x4063f9bcd592bfbe,
    0x4064979779328993, 0x40653a5188954e04, 0x4065e211854f8596, 0x40668eff213fe383, 0x4067414347f3f23c, 0x4067f9082856ea07,
    0x4068b6793ead0c67, 0x406979c35edde0bc, 0x406a4314bf0fc1b6, 0x406b129d02973e0d, 0x406be88d453ce2ea, 0x406cc51826dc1aef,
    0x406da871d75de1b4, 0x406e92d023122190, 0x406f846a7f6aa79f,
];

/// Number of quantized scale levels.
pub const LEVELS: usize = 256;

/// Snap a raw scale to its grid slot.  Non-finite or non-positive scales
/// collapse to the smallest level so they still code deterministically.
pub fn level_index(sigma: f32) -> usize {
    let s = sigma as f64;
    if !(s > 0.0) {
        return 0;
    }
    SIGMA_MID_BITS.partition_point(|&bits| f64::from_bits(bits) < s)
}

/// The representative scale of a grid slot.
pub fn level_value(index: usize) -> f64 {
    f64::from_bits(SIGMA_LEVEL_BITS[index])
}
