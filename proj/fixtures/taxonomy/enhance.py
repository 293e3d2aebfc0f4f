from PIL import ImageEnhance
import matplotlib.pyplot as plt
boosted = ImageEnhance.Contrast(image_clue_0).enhance(2.5)
plt.imshow(boosted)
plt.show()
