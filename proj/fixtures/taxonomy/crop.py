import matplotlib.pyplot as plt
# zoom in on the upper-left quadrant where the sign is
w, h = image_clue_0.size
region = image_clue_0.crop((0, 0, w // 2, h // 2))
plt.imshow(region)
plt.axis('off')
plt.show()
